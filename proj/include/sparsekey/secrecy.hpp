#pragma once

#include "sparsekey/core.hpp"

#include <utility>

namespace sparsekey {

/// Sorted set of active sub-channel indices out of `universe`.
struct SparsityPattern {
  std::vector<int> indices;
  int universe;

  SparsityPattern(std::vector<int> idx, int universe_);
  int size() const { return static_cast<int>(indices.size()); }
  bool contains(int j) const;
};

/// Per-step channel state: SNR and the eavesdropper degradation factor.
struct ChannelState {
  double snr;
  double eve_degradation;

  ChannelState(double snr_, double eve_degradation_);
};

/// Legitimate and eavesdropper mutual information for one channel state.
std::pair<double, double> mi_pair(const ChannelState& state);

/// Paired key strings plus the public transcript.
struct KeySession {
  std::vector<int> key_a;
  std::vector<int> key_b;
  std::vector<int> transcript;
};

/// Draws the legitimate pattern uniformly, admits each of its indices into
/// the eavesdropper pattern independently with probability psi, then refills
/// the eavesdropper pattern to size sigma from outside the legitimate one.
/// Requires universe - sigma >= sigma so the refill always succeeds.
std::pair<SparsityPattern, SparsityPattern> sample_patterns(int sigma, double psi, int universe,
                                                            RandomSource& rng);

/// Gaussian-channel mutual information in bits per use.
double mi_bob(double omega);
double mi_eve(double omega, double kappa_e);

/// Achievable key rate per dimension, time-averaged over the SNR path:
/// (1-psi) sigma I1(w/sigma) + psi sigma (I1(w/sigma) - I2(w/sigma)).
double key_rate(double psi, int sigma, const std::vector<double>& omega_path, double kappa_e);

enum class TailDirection { AtLeast, AtMost };

struct ChanceVerdict {
  bool satisfied;
  double empirical_prob;  // fraction of samples >= threshold
};

/// Empirical tail-probability constraint: the fraction of samples at or above
/// the threshold, compared against the level in the given direction.
ChanceVerdict chance_constraint(const std::vector<double>& samples, double threshold, double level,
                                TailDirection direction);

/// Concentration radius exp(-2 n eps^2) attached to every empirical verdict.
double hoeffding_bound(int n, double eps);

/// 1 - Pr(rate >= lambda8), the outage fraction; non-decreasing in lambda8.
double outage(const std::vector<double>& rate_samples, double lambda8);

struct AlphaKeyReport {
  bool agree;
  bool leakage_ok;
  bool uniform;
  double agreement_prob;
  double leakage_bits;
  double entropy_bits;
  int n_symbols;
};

/// Verifies the three key conditions empirically with plug-in estimators:
/// agreement probability >= 1 - alpha, transcript leakage <= alpha bits,
/// and key entropy >= log2(alphabet) - alpha.
AlphaKeyReport alpha_key_check(const KeySession& session, double alpha, int alphabet_size);

}  // namespace sparsekey
