#include "sparsekey/sparse_coder.hpp"

#include "sparsekey/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsekey {

namespace {

std::vector<int> column_support(const Matrix& coeffs, Eigen::Index j) {
  std::vector<int> support;
  for (Eigen::Index i = 0; i < coeffs.rows(); ++i)
    if (coeffs(i, j) != 0.0) support.push_back(static_cast<int>(i));
  return support;
}

// Objective contribution of a single column: squared residual plus the
// perturbation term for its support size.
double column_objective(const Matrix& atoms, const Vector& x, const Vector& coeffs,
                        double sigma_theta) {
  double nnz = 0.0;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    if (coeffs(i) != 0.0) nnz += 1.0;
  return (x - atoms * coeffs).squaredNorm() + sigma_theta * sigma_theta * nnz;
}

Vector omp_column(const Matrix& atoms, const Vector& x, int budget) {
  const Eigen::Index m = atoms.cols();
  Vector coeffs = Vector::Zero(m);
  std::vector<int> support;
  Vector residual = x;
  for (int k = 0; k < budget; ++k) {
    // Most aligned atom; strict > keeps ties at the lowest index, and the
    // floor stops the pursuit once the residual is orthogonal to every atom.
    int best = -1;
    double best_score = 1e-12;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double score = std::abs(atoms.col(i).dot(residual));
      if (score > best_score) {
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    if (best < 0) break;
    if (std::find(support.begin(), support.end(), best) != support.end()) break;
    support.push_back(best);
    const Vector refit = least_squares_on_support(atoms, x, support);
    residual = x - atoms * refit;
    coeffs = refit;
  }
  return coeffs;
}

}  // namespace

Vector least_squares_on_support(const Matrix& atoms, const Vector& x,
                                const std::vector<int>& support) {
  Vector coeffs = Vector::Zero(atoms.cols());
  if (support.empty()) return coeffs;
  Matrix sub(atoms.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = atoms.col(support[k]);
  const Vector sol = sub.colPivHouseholderQr().solve(x);
  for (std::size_t k = 0; k < support.size(); ++k) coeffs(support[k]) = sol(static_cast<Eigen::Index>(k));
  return coeffs;
}

SparseCode sparse_encode(const Dictionary& dict, const DataBatch& x, int budget) {
  if (dict.ambient_dim() != x.ambient_dim())
    throw std::invalid_argument("sparse_encode: dictionary/data dimension mismatch");
  if (budget < 1 || budget > dict.atom_count())
    throw std::invalid_argument("sparse_encode: budget must lie in [1, atom_count]");
  Matrix coeffs(dict.atom_count(), x.sample_count());
  for (Eigen::Index j = 0; j < x.sample_count(); ++j)
    coeffs.col(j) = omp_column(dict.atoms, x.values.col(j), budget);
  return SparseCode(std::move(coeffs), budget);
}

SparseCode perturb_code(const SparseCode& code, const PerturbationModel& model,
                        RandomSource& rng) {
  Matrix out = code.coefficients;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      if (out(i, j) != 0.0) out(i, j) += model.sigma_theta * rng.normal();
  return SparseCode(std::move(out), code.sparsity_budget);
}

MonteCarloEstimate expected_distortion(const SparseCode& code, const PerturbationModel& model,
                                       int n_samples, RandomSource& rng) {
  if (n_samples < 1) throw std::invalid_argument("expected_distortion: n_samples must be >= 1");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const SparseCode draw = perturb_code(code, model, rng);
    const double d = distortion(draw.coefficients, code.coefficients);
    sum += d;
    sum_sq += d * d;
  }
  MonteCarloEstimate est;
  est.n_samples = n_samples;
  est.mean = sum / n_samples;
  if (n_samples > 1) {
    const double var = std::max(0.0, (sum_sq - sum * sum / n_samples) / (n_samples - 1));
    est.std_error = std::sqrt(var / n_samples);
  }
  return est;
}

double reconstruction_objective(const DataBatch& x, const Dictionary& dict,
                                const SparseCode& code, double sigma_theta) {
  const double entries =
      static_cast<double>(x.values.rows()) * static_cast<double>(x.values.cols());
  const double residual = (x.values - dict.atoms * code.coefficients).squaredNorm();
  const double noise = sigma_theta * sigma_theta * static_cast<double>(code.nonzero_count());
  return (residual + noise) / entries;
}

Dictionary dictionary_update(const Dictionary& dict, const DataBatch& x,
                             const SparseCode& code, double step) {
  if (dict.ambient_dim() != x.ambient_dim() || dict.atom_count() != code.atom_count() ||
      x.sample_count() != code.sample_count())
    throw std::invalid_argument("dictionary_update: inconsistent shapes");
  if (!(step > 0.0)) throw std::invalid_argument("dictionary_update: step must be positive");

  const double entries =
      static_cast<double>(x.values.rows()) * static_cast<double>(x.values.cols());
  auto objective = [&](const Matrix& atoms) {
    return (x.values - atoms * code.coefficients).squaredNorm() / entries;
  };
  const double base = objective(dict.atoms);
  const Matrix grad =
      -2.0 / entries * (x.values - dict.atoms * code.coefficients) * code.coefficients.transpose();
  if (grad.norm() == 0.0) return dict;

  // Worst-reconstructed data column, used to re-seed collapsed atoms.
  const Matrix residuals = x.values - dict.atoms * code.coefficients;
  Eigen::Index worst = 0;
  double worst_norm = -1.0;
  for (Eigen::Index j = 0; j < residuals.cols(); ++j) {
    const double n = residuals.col(j).norm();
    if (n > worst_norm) {
      worst_norm = n;
      worst = j;
    }
  }

  double s = step;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Matrix cand = dict.atoms - s * grad;
    for (Eigen::Index jcol = 0; jcol < cand.cols(); ++jcol) {
      const double n = cand.col(jcol).norm();
      if (n < 1e-12) {
        Vector seed = x.values.col(worst);
        const double sn = seed.norm();
        cand.col(jcol) = sn > 1e-12 ? Vector(seed / sn) : Vector::Unit(cand.rows(), jcol % cand.rows());
      } else {
        cand.col(jcol) /= n;
      }
    }
    if (objective(cand) <= base + 1e-15) return Dictionary(std::move(cand), dict.atom_budget);
    s *= 0.5;
  }
  return dict;
}

SparseCode encode_guarded(const Dictionary& dict, const DataBatch& x, int budget,
                          const SparseCode& previous, double sigma_theta) {
  if (previous.atom_count() != dict.atom_count() || previous.sample_count() != x.sample_count())
    throw std::invalid_argument("encode_guarded: previous code shape mismatch");
  Matrix coeffs(dict.atom_count(), x.sample_count());
  for (Eigen::Index j = 0; j < x.sample_count(); ++j) {
    const Vector fresh = omp_column(dict.atoms, x.values.col(j), budget);
    const Vector kept = least_squares_on_support(dict.atoms, x.values.col(j),
                                                 column_support(previous.coefficients, j));
    const double fresh_obj = column_objective(dict.atoms, x.values.col(j), fresh, sigma_theta);
    const double kept_obj = column_objective(dict.atoms, x.values.col(j), kept, sigma_theta);
    coeffs.col(j) = fresh_obj < kept_obj ? fresh : kept;
  }
  return SparseCode(std::move(coeffs), budget);
}

Dictionary seed_dictionary(const DataBatch& x, int atom_count, int atom_budget,
                           RandomSource& rng) {
  if (atom_count < 1 || atom_count > atom_budget)
    throw std::invalid_argument("seed_dictionary: need 1 <= atom_count <= atom_budget");
  const Eigen::Index n = x.ambient_dim();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.sample_count()));
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<Eigen::Index>(j);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return x.values.col(a).norm() > x.values.col(b).norm();
  });
  Matrix atoms(n, atom_count);
  for (int k = 0; k < atom_count; ++k) {
    Vector seed = x.values.col(order[static_cast<std::size_t>(k) % order.size()]);
    if (static_cast<std::size_t>(k) >= order.size()) {
      RandomSource jitter = rng.derive(1000 + static_cast<std::uint64_t>(k));
      for (Eigen::Index i = 0; i < seed.size(); ++i) seed(i) += 1e-3 * jitter.normal();
    }
    const double norm = seed.norm();
    atoms.col(k) = norm > 1e-12 ? Vector(seed / norm) : Vector::Unit(n, k % n);
  }
  return Dictionary(std::move(atoms), atom_budget);
}

P1Solution solve_p1(const DataBatch& x, const Thresholds& thresholds,
                    const PerturbationModel& model, int iters, RandomSource& rng) {
  if (iters < 1) throw std::invalid_argument("solve_p1: iters must be >= 1");
  const auto violations = validate_config(thresholds);
  if (!violations.empty()) throw std::invalid_argument("solve_p1: " + violations.front());

  const int m = thresholds.lambda0;
  const int budget = std::min(thresholds.lambda1, m);

  Dictionary dict = seed_dictionary(x, m, thresholds.lambda0, rng);
  SparseCode code = sparse_encode(dict, x, budget);

  // The base problem is the fully unconstrained member of the family; solving
  // it through the same loop keeps the two trajectories bit-identical.
  Thresholds unconstrained = thresholds;
  unconstrained.lambda1 = budget;
  unconstrained.lambda2 = std::numeric_limits<double>::infinity();
  unconstrained.lambda3 = std::numeric_limits<double>::infinity();
  ProblemInputs inputs{DataBatch(x.values),
                       SideInfo(Matrix::Zero(m, x.sample_count())),
                       model,
                       ScalarModel{},
                       ScalarModel{1.0, 0.0},
                       0.0,
                       0.5,
                       64,
                       1,
                       1,
                       std::nullopt,
                       std::nullopt};
  ConstraintSet problem = build_problem(ProblemVariant::P2, unconstrained, std::move(inputs), 0.0);
  problem.stall_tolerance = 0.0;  // run the full iteration budget

  GreedySolveResult result = greedy_solve(problem, dict, code, iters, rng);
  return P1Solution{std::move(result.dictionary), std::move(result.code),
                    result.trace.objectives()};
}

}  // namespace sparsekey
