#pragma once

#include "sparsekey/core.hpp"

namespace sparsekey {

/// Mean-reverting linear SDE parameters. The explicit scheme needs
/// gamma0 * dt < 1.
struct LangevinParams {
  double gamma0 = 1.0;
  double noise_scale = 0.0;
  double dt = 0.1;
};

/// Uniformly spaced trajectory of code matrices; states[0] is the initial
/// condition.
struct LangevinPath {
  std::vector<double> times;
  std::vector<Matrix> states;
};

/// Stochastic perturbation window: a base offset xi and an increment delta_xi,
/// both strictly positive.
struct PerturbationWindow {
  double xi = 1e-3;
  double delta_xi = 1e-3;
};

/// Euler-Maruyama step: state * (1 - gamma0 dt) + noise_scale * sqrt(dt) * G.
Matrix ou_step(const Matrix& state, const LangevinParams& params, RandomSource& rng);

/// n_steps repeated ou_step calls; the path has n_steps + 1 states.
LangevinPath simulate_path(const Matrix& initial, const LangevinParams& params, int n_steps,
                           RandomSource& rng);

/// Mean squared defect between observed increments and the drift term,
/// normalized by the step noise variance (raw when noise_scale is zero).
/// A path produced by simulate_path scores ~1.
double residual_6b(const LangevinPath& path, const LangevinParams& params);

/// Existence radius for the mean-reverting drift: min(1 / (2 L), bound).
double picard_window(double lipschitz, double bound);

/// Two-stage stochastic perturbation of a code across the window: a Brownian
/// displacement of size sqrt(xi) on the support, then a delta_xi-scaled
/// reciprocal kick 1 / (entry + w2) with denominators clamped away from zero
/// at magnitude 1e-6. Supports never change.
struct SlePerturbation {
  SparseCode code_xi;
  SparseCode code_xi_dxi;
};
SlePerturbation sle_perturb(const SparseCode& code, const PerturbationWindow& window,
                            RandomSource& rng);

/// Perturbation-distortion cap: distortion(code_xi, code_dxi) <= lambda3.
bool constraint_6e(const SparseCode& code_xi, const SparseCode& code_dxi, double lambda3);

}  // namespace sparsekey
