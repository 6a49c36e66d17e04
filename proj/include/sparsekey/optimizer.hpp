#pragma once

#include "sparsekey/core.hpp"
#include "sparsekey/langevin.hpp"
#include "sparsekey/sparse_coder.hpp"

#include <optional>
#include <string>

namespace sparsekey {

enum class ProblemVariant { P2, P3, P3prime, P3doubleprime };

/// Probabilistic constraint tags, named after the inequality they carry:
/// 7.f  Pr(psi >= lambda4) <= lambda5
/// 8.h  Pr(omega >= lambda6) >= lambda7
/// 9.f  Pr(rate >= lambda8) >= lambda9
enum class ProbTag { PsiTail7f, SnrTail8h, RateTail9f };

/// Uniform jitter around a mean, clamped to the parameter's natural range.
struct ScalarModel {
  double mean = 0.0;
  double jitter = 0.0;
};

/// Everything the assembled problem evaluates against.
struct ProblemInputs {
  DataBatch data;
  SideInfo side_info;
  PerturbationModel perturbation;
  ScalarModel psi;          // overlap parameter, clamped to [0,1]
  ScalarModel snr;          // instantaneous SNR, clamped positive
  double snr_drift = 0.0;   // per-unit-time slope of the SNR mean
  double kappa_e = 0.5;
  int universe = 64;
  int omega_path_length = 8;
  int mc_samples = 256;
  std::optional<LangevinParams> langevin;    // enables the 6.b penalty
  std::optional<PerturbationWindow> window;  // 6.d sampling window / 6.e channel
};

/// Assembled problem: hard caps from the thresholds, the dynamic Langevin
/// weight, and the variant's probabilistic tail set.
struct ConstraintSet {
  ProblemVariant variant = ProblemVariant::P2;
  Thresholds thresholds;
  ProblemInputs inputs;
  std::vector<ProbTag> probabilistic;
  double langevin_weight = 0.0;
  double penalty_weight = 10.0;
  double stall_tolerance = 1e-6;  // 0 disables early termination
};

/// Deterministic constraint assembly. P2 carries no tails, P3 adds 7.f,
/// P3' adds 7.f and 8.h, P3'' carries 9.f alone. Throws std::invalid_argument
/// when the thresholds fail validation.
ConstraintSet build_problem(ProblemVariant variant, const Thresholds& thresholds,
                            ProblemInputs inputs, double langevin_weight = 1.0);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;       // penalized objective, non-increasing over accepted rows
  double reconstruction = 0.0;  // data-fit part alone
  double mean_support = 0.0;    // average per-column nonzeros of the iterate
  bool accepted = false;
  double step_size = 0.0;
  bool hard_6c_ok = true;
  bool hard_6e_ok = true;
  double langevin_residual = 0.0;
  double psi_tail_prob = -1.0;   // -1 when the tail is not part of the problem
  double snr_tail_prob = -1.0;
  double rate_tail_prob = -1.0;
  bool chance_ok = true;
};

struct SolveTrace {
  std::vector<IterationRecord> records;

  std::vector<double> objectives() const;
};

enum class SolveStatus { Converged, IterationLimit, Infeasible };

struct GreedySolveResult {
  Dictionary dictionary;
  SparseCode code;
  SolveTrace trace;
  SolveStatus status = SolveStatus::Converged;
  std::string violated_constraint;  // named when status == Infeasible
};

/// Greedy loop: per iteration a guarded sparse-encode projection (6.a stays
/// hard), one backtracking descent step on the penalized objective over the
/// dictionary and the supported code entries, and a Monte Carlo evaluation of
/// the variant's tail constraints. A step that cannot keep the penalized
/// objective from rising is rejected and the iterate stands. Terminates on
/// relative change < 1e-6 or after `iters` iterations; the final iterate is
/// re-checked against every hard and probabilistic constraint and the result
/// is flagged infeasible (never thrown) when one fails.
GreedySolveResult greedy_solve(const ConstraintSet& problem, const Dictionary& init_dict,
                               const SparseCode& init_code, int iters, RandomSource& rng);

/// Per-constraint verdicts for a candidate iterate, evaluated outside the
/// solver loop. Used for final certification and the nesting checks.
struct FeasibilityReport {
  bool hard_6a = true;
  bool hard_6c = true;
  bool hard_6e = true;
  bool prob_7f = true;
  bool prob_8h = true;
  bool prob_9f = true;
  bool feasible = true;
  std::string first_violation;
};
FeasibilityReport certify(const ConstraintSet& problem, const Dictionary& dict,
                          const SparseCode& code, RandomSource& rng);

/// Elementwise constrained/unconstrained ratio; the shorter history is padded
/// with its last value. A zero denominator yields a NaN sentinel and sets the
/// flag.
struct RatioTrace {
  std::vector<double> values;
  bool had_zero_denominator = false;
};
RatioTrace normalized_ratio_trace(const std::vector<double>& constrained,
                                  const std::vector<double>& unconstrained);

/// Average per-column support size of a code, the sigma the key-rate
/// evaluations derive from an iterate.
int support_sigma(const SparseCode& code, int universe);

}  // namespace sparsekey
