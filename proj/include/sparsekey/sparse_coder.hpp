#pragma once

#include "sparsekey/core.hpp"

namespace sparsekey {

/// Additive zero-mean Gaussian perturbation on the supported entries of a
/// code; sigma_theta is the per-entry noise scale.
struct PerturbationModel {
  double sigma_theta = 0.0;
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

struct P1Solution {
  Dictionary dictionary;
  SparseCode code;
  std::vector<double> objective_history;
};

/// Greedy orthogonal pursuit, one column at a time: pick the atom most
/// correlated with the residual (ties broken by lowest index), least-squares
/// refit on the grown support, stop at the budget or when the residual is
/// orthogonal to every atom. Deterministic.
SparseCode sparse_encode(const Dictionary& dict, const DataBatch& x, int budget);

/// Least-squares coefficients on a fixed support for one column.
/// Exposed for reuse by the solvers; entries off the support stay zero.
Vector least_squares_on_support(const Matrix& atoms, const Vector& x,
                                const std::vector<int>& support);

/// Adds i.i.d. Gaussian noise of scale model.sigma_theta to supported entries
/// only; the support never changes.
SparseCode perturb_code(const SparseCode& code, const PerturbationModel& model,
                        RandomSource& rng);

/// Monte Carlo estimate of the mean distortion between the perturbed code and
/// the code itself, with its standard error.
MonteCarloEstimate expected_distortion(const SparseCode& code, const PerturbationModel& model,
                                       int n_samples, RandomSource& rng);

/// One projected-gradient step on the reconstruction error, backtracking by
/// halving until the objective does not increase; columns are renormalized to
/// unit norm. A column collapsing to zero is re-seeded from the
/// worst-reconstructed data column.
Dictionary dictionary_update(const Dictionary& dict, const DataBatch& x,
                             const SparseCode& code, double step);

/// Reconstruction objective used by the solvers: mean squared residual plus
/// the closed-form perturbation term sigma^2 * nnz / entries (unit atoms make
/// the theta-expectation exact, no sampling needed).
double reconstruction_objective(const DataBatch& x, const Dictionary& dict,
                                const SparseCode& code, double sigma_theta);

/// Per-column guarded encode: take the greedy pursuit column unless a
/// least-squares refit of the previous support scores better under the
/// objective above. Never worse than keeping the previous code, which is what
/// makes the alternation in solve_p1 monotone.
SparseCode encode_guarded(const Dictionary& dict, const DataBatch& x, int budget,
                          const SparseCode& previous, double sigma_theta);

/// Deterministic data-driven initial dictionary: the largest data columns,
/// normalized; repeats are jittered apart, degenerate columns fall back to
/// unit vectors.
Dictionary seed_dictionary(const DataBatch& x, int atom_count, int atom_budget,
                           RandomSource& rng);

/// Alternating minimization for the base problem: guarded encode, projected
/// dictionary step, dead-atom re-seeding. The dictionary holds thresholds
/// lambda0 atoms; the code obeys the lambda1 budget; the recorded objective
/// history is non-increasing. Runs the full iteration count.
P1Solution solve_p1(const DataBatch& x, const Thresholds& thresholds,
                    const PerturbationModel& model, int iters, RandomSource& rng);

}  // namespace sparsekey
