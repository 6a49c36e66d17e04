#include "sparsekey/langevin.hpp"

#include <cmath>
#include <stdexcept>

namespace sparsekey {

namespace {

void require_valid(const LangevinParams& params) {
  if (!(params.gamma0 > 0.0)) throw std::invalid_argument("LangevinParams: gamma0 must be positive");
  if (!(params.noise_scale >= 0.0))
    throw std::invalid_argument("LangevinParams: noise_scale must be nonnegative");
  if (!(params.dt > 0.0)) throw std::invalid_argument("LangevinParams: dt must be positive");
  if (!(params.gamma0 * params.dt < 1.0))
    throw std::invalid_argument("LangevinParams: need gamma0 * dt < 1 for stability");
}

}  // namespace

Matrix ou_step(const Matrix& state, const LangevinParams& params, RandomSource& rng) {
  require_valid(params);
  Matrix next = state * (1.0 - params.gamma0 * params.dt);
  if (params.noise_scale > 0.0) {
    const double scale = params.noise_scale * std::sqrt(params.dt);
    for (Eigen::Index j = 0; j < next.cols(); ++j)
      for (Eigen::Index i = 0; i < next.rows(); ++i) next(i, j) += scale * rng.normal();
  }
  return next;
}

LangevinPath simulate_path(const Matrix& initial, const LangevinParams& params, int n_steps,
                           RandomSource& rng) {
  if (n_steps < 1) throw std::invalid_argument("simulate_path: n_steps must be >= 1");
  require_valid(params);
  LangevinPath path;
  path.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  path.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  path.times.push_back(0.0);
  path.states.push_back(initial);
  for (int k = 1; k <= n_steps; ++k) {
    path.times.push_back(k * params.dt);
    path.states.push_back(ou_step(path.states.back(), params, rng));
  }
  return path;
}

double residual_6b(const LangevinPath& path, const LangevinParams& params) {
  if (path.states.size() < 2) throw std::invalid_argument("residual_6b: path too short");
  require_valid(params);
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t k = 1; k < path.states.size(); ++k) {
    const Matrix defect =
        (path.states[k] - path.states[k - 1]) + params.gamma0 * params.dt * path.states[k - 1];
    sum += defect.squaredNorm();
    count += static_cast<double>(defect.size());
  }
  const double mean_defect = sum / count;
  // The defect of a generated path is the pure noise increment, whose
  // per-entry variance is noise^2 * dt; normalizing by it makes the statistic
  // ~1 for true paths. Without noise the raw defect is reported.
  const double denom = params.noise_scale > 0.0 ? params.noise_scale * params.noise_scale * params.dt : 1.0;
  return mean_defect / denom;
}

double picard_window(double lipschitz, double bound) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("picard_window: lipschitz must be positive");
  if (!(bound > 0.0)) throw std::invalid_argument("picard_window: bound must be positive");
  return std::min(1.0 / (2.0 * lipschitz), bound);
}

SlePerturbation sle_perturb(const SparseCode& code, const PerturbationWindow& window,
                            RandomSource& rng) {
  if (!(window.xi > 0.0) || !(window.delta_xi > 0.0))
    throw std::invalid_argument("sle_perturb: window offsets must be positive");
  const double sqrt_xi = std::sqrt(window.xi);
  Matrix xi_stage = code.coefficients;
  Matrix dxi_stage(xi_stage.rows(), xi_stage.cols());
  for (Eigen::Index j = 0; j < xi_stage.cols(); ++j) {
    for (Eigen::Index i = 0; i < xi_stage.rows(); ++i) {
      if (code.coefficients(i, j) == 0.0) {
        dxi_stage(i, j) = 0.0;
        continue;
      }
      xi_stage(i, j) += sqrt_xi * rng.normal();
      double denom = xi_stage(i, j) + rng.normal();
      if (std::abs(denom) < 1e-6) denom = denom < 0.0 ? -1e-6 : 1e-6;
      dxi_stage(i, j) = xi_stage(i, j) + window.delta_xi / denom;
    }
  }
  return SlePerturbation{SparseCode(std::move(xi_stage), code.sparsity_budget),
                         SparseCode(std::move(dxi_stage), code.sparsity_budget)};
}

bool constraint_6e(const SparseCode& code_xi, const SparseCode& code_dxi, double lambda3) {
  return distortion(code_xi.coefficients, code_dxi.coefficients) <= lambda3;
}

}  // namespace sparsekey
