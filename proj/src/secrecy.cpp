#include "sparsekey/secrecy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace sparsekey {

namespace {

// Uniform sigma-subset by partial Fisher-Yates over an index pool.
std::vector<int> uniform_subset(std::vector<int>& pool, int sigma, RandomSource& rng) {
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(sigma));
  int remaining = static_cast<int>(pool.size());
  for (int k = 0; k < sigma; ++k) {
    const int at = rng.uniform_int(remaining);
    picked.push_back(pool[static_cast<std::size_t>(at)]);
    std::swap(pool[static_cast<std::size_t>(at)], pool[static_cast<std::size_t>(remaining - 1)]);
    --remaining;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

double entropy_bits_of_counts(const std::map<int, long long>& counts, long long total) {
  double h = 0.0;
  for (const auto& [symbol, count] : counts) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

SparsityPattern::SparsityPattern(std::vector<int> idx, int universe_)
    : indices(std::move(idx)), universe(universe_) {
  if (universe < 1) throw std::invalid_argument("SparsityPattern: universe must be positive");
  std::sort(indices.begin(), indices.end());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= universe)
      throw std::invalid_argument("SparsityPattern: index out of range");
    if (k > 0 && indices[k] == indices[k - 1])
      throw std::invalid_argument("SparsityPattern: duplicate index");
  }
}

bool SparsityPattern::contains(int j) const {
  return std::binary_search(indices.begin(), indices.end(), j);
}

ChannelState::ChannelState(double snr_, double eve_degradation_)
    : snr(snr_), eve_degradation(eve_degradation_) {
  if (!(snr > 0.0)) throw std::invalid_argument("ChannelState: snr must be positive");
  if (!(eve_degradation >= 0.0 && eve_degradation <= 1.0))
    throw std::invalid_argument("ChannelState: eve_degradation must lie in [0,1]");
}

std::pair<double, double> mi_pair(const ChannelState& state) {
  return {mi_bob(state.snr), mi_eve(state.snr, state.eve_degradation)};
}

std::pair<SparsityPattern, SparsityPattern> sample_patterns(int sigma, double psi, int universe,
                                                            RandomSource& rng) {
  if (sigma < 1 || sigma > universe)
    throw std::invalid_argument("sample_patterns: need 1 <= sigma <= universe");
  if (!(psi >= 0.0 && psi <= 1.0))
    throw std::invalid_argument("sample_patterns: psi must lie in [0,1]");
  if (universe - sigma < sigma)
    throw std::invalid_argument("sample_patterns: refill needs universe - sigma >= sigma");

  std::vector<int> pool(static_cast<std::size_t>(universe));
  for (int j = 0; j < universe; ++j) pool[static_cast<std::size_t>(j)] = j;
  std::vector<int> ab = uniform_subset(pool, sigma, rng);

  std::vector<int> ae;
  ae.reserve(static_cast<std::size_t>(sigma));
  for (int j : ab)
    if (rng.uniform01() < psi) ae.push_back(j);

  // Refill to size sigma from the complement of the legitimate pattern.
  std::vector<int> complement;
  complement.reserve(static_cast<std::size_t>(universe - sigma));
  for (int j = 0; j < universe; ++j)
    if (!std::binary_search(ab.begin(), ab.end(), j)) complement.push_back(j);
  const int missing = sigma - static_cast<int>(ae.size());
  if (missing > static_cast<int>(complement.size()))
    throw std::invalid_argument("sample_patterns: refill pool exhausted");
  std::vector<int> extra = uniform_subset(complement, missing, rng);
  ae.insert(ae.end(), extra.begin(), extra.end());

  return {SparsityPattern(std::move(ab), universe), SparsityPattern(std::move(ae), universe)};
}

double mi_bob(double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("mi_bob: omega must be positive");
  return 0.5 * std::log2(1.0 + omega);
}

double mi_eve(double omega, double kappa_e) {
  if (!(omega > 0.0)) throw std::invalid_argument("mi_eve: omega must be positive");
  if (!(kappa_e >= 0.0 && kappa_e <= 1.0))
    throw std::invalid_argument("mi_eve: kappa_e must lie in [0,1]");
  return 0.5 * std::log2(1.0 + kappa_e * omega);
}

double key_rate(double psi, int sigma, const std::vector<double>& omega_path, double kappa_e) {
  if (omega_path.empty()) throw std::invalid_argument("key_rate: empty SNR path");
  if (sigma < 1) throw std::invalid_argument("key_rate: sigma must be positive");
  if (!(psi >= 0.0 && psi <= 1.0)) throw std::invalid_argument("key_rate: psi must lie in [0,1]");
  double total = 0.0;
  for (double omega : omega_path) {
    const double per = omega / static_cast<double>(sigma);
    const double i1 = mi_bob(per);
    const double i2 = mi_eve(per, kappa_e);
    total += (1.0 - psi) * sigma * i1 + psi * sigma * (i1 - i2);
  }
  return total / static_cast<double>(omega_path.size());
}

ChanceVerdict chance_constraint(const std::vector<double>& samples, double threshold, double level,
                                TailDirection direction) {
  if (samples.empty()) throw std::invalid_argument("chance_constraint: no samples");
  long long hits = 0;
  for (double s : samples)
    if (s >= threshold) ++hits;
  const double prob = static_cast<double>(hits) / static_cast<double>(samples.size());
  const bool ok = direction == TailDirection::AtLeast ? prob >= level : prob <= level;
  return ChanceVerdict{ok, prob};
}

double hoeffding_bound(int n, double eps) {
  if (n < 1) throw std::invalid_argument("hoeffding_bound: n must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("hoeffding_bound: eps must be positive");
  return std::exp(-2.0 * static_cast<double>(n) * eps * eps);
}

double outage(const std::vector<double>& rate_samples, double lambda8) {
  if (rate_samples.empty()) throw std::invalid_argument("outage: no samples");
  long long below = 0;
  for (double r : rate_samples)
    if (!(r >= lambda8)) ++below;
  return static_cast<double>(below) / static_cast<double>(rate_samples.size());
}

AlphaKeyReport alpha_key_check(const KeySession& session, double alpha, int alphabet_size) {
  if (alphabet_size < 1) throw std::invalid_argument("alpha_key_check: empty alphabet");
  if (session.key_a.empty()) throw std::invalid_argument("alpha_key_check: empty session");
  if (session.key_a.size() != session.key_b.size())
    throw std::invalid_argument("alpha_key_check: key length mismatch");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha_key_check: alpha must lie in (0,1)");

  const long long n = static_cast<long long>(session.key_a.size());

  long long agreements = 0;
  for (std::size_t t = 0; t < session.key_a.size(); ++t)
    if (session.key_a[t] == session.key_b[t]) ++agreements;
  const double agreement_prob = static_cast<double>(agreements) / static_cast<double>(n);

  // Plug-in entropy of the key (Alice's side carries the agreed key).
  std::map<int, long long> key_counts;
  for (int symbol : session.key_a) ++key_counts[symbol];
  const double h_key = entropy_bits_of_counts(key_counts, n);

  // Plug-in MI between key and transcript: I = H(K) + H(B) - H(K, B).
  double leakage = 0.0;
  if (!session.transcript.empty()) {
    if (session.transcript.size() != session.key_a.size())
      throw std::invalid_argument("alpha_key_check: transcript length mismatch");
    std::map<int, long long> transcript_counts;
    std::map<std::pair<int, int>, long long> joint_counts;
    for (std::size_t t = 0; t < session.key_a.size(); ++t) {
      ++transcript_counts[session.transcript[t]];
      ++joint_counts[{session.key_a[t], session.transcript[t]}];
    }
    const double h_transcript = entropy_bits_of_counts(transcript_counts, n);
    double h_joint = 0.0;
    for (const auto& [pair, count] : joint_counts) {
      const double p = static_cast<double>(count) / static_cast<double>(n);
      h_joint -= p * std::log2(p);
    }
    leakage = std::max(0.0, h_key + h_transcript - h_joint);
  }

  AlphaKeyReport report;
  report.agreement_prob = agreement_prob;
  report.leakage_bits = leakage;
  report.entropy_bits = h_key;
  report.n_symbols = static_cast<int>(n);
  report.agree = agreement_prob >= 1.0 - alpha;
  report.leakage_ok = leakage <= alpha;
  report.uniform = h_key >= std::log2(static_cast<double>(alphabet_size)) - alpha;
  return report;
}

}  // namespace sparsekey
