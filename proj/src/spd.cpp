#include "sparsekey/spd.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace sparsekey {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct EigenSplit {
  Vector eigenvalues;  // ascending
  Matrix vectors;
};

EigenSplit eigen_split(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  return EigenSplit{solver.eigenvalues(), solver.eigenvectors()};
}

// base^{+-1/2} via the spectral decomposition.
std::pair<Matrix, Matrix> sqrt_and_inv_sqrt(const SPDMatrix& base) {
  const EigenSplit split = eigen_split(base.values);
  Vector root = split.eigenvalues;
  Vector inv_root = split.eigenvalues;
  for (Eigen::Index i = 0; i < root.size(); ++i) {
    const double r = std::sqrt(split.eigenvalues(i));
    root(i) = r;
    inv_root(i) = 1.0 / r;
  }
  return {split.vectors * root.asDiagonal() * split.vectors.transpose(),
          split.vectors * inv_root.asDiagonal() * split.vectors.transpose()};
}

Matrix spectral_map(const Matrix& sym, const std::function<double(double)>& fn) {
  const EigenSplit split = eigen_split(sym);
  Vector mapped = split.eigenvalues;
  for (Eigen::Index i = 0; i < mapped.size(); ++i) mapped(i) = fn(split.eigenvalues(i));
  return split.vectors * mapped.asDiagonal() * split.vectors.transpose();
}

}  // namespace

SPDMatrix::SPDMatrix(Matrix v) : values(std::move(v)) {
  if (values.rows() != values.cols()) throw std::invalid_argument("SPDMatrix: must be square");
  if (values.rows() < 1 || values.rows() > 16)
    throw std::invalid_argument("SPDMatrix: size must lie in [1,16]");
  if ((values - values.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("SPDMatrix: not symmetric within 1e-10");
  values = 0.5 * (values + values.transpose().eval());
  const EigenSplit split = eigen_split(values);
  if (split.eigenvalues(0) <= 0.0)
    throw std::invalid_argument("SPDMatrix: spectrum must be strictly positive");
}

Matrix riemannian_log(const SPDMatrix& base, const SPDMatrix& point) {
  if (base.size() != point.size()) throw std::invalid_argument("riemannian_log: size mismatch");
  const auto [root, inv_root] = sqrt_and_inv_sqrt(base);
  const Matrix whitened = inv_root * point.values * inv_root;
  const Matrix logged = spectral_map(0.5 * (whitened + whitened.transpose()), [](double v) {
    return std::log(std::max(v, 1e-12));
  });
  Matrix tangent = root * logged * root;
  return 0.5 * (tangent + tangent.transpose().eval());
}

SPDMatrix riemannian_exp(const SPDMatrix& base, const Matrix& tangent) {
  if (base.size() != tangent.rows() || tangent.rows() != tangent.cols())
    throw std::invalid_argument("riemannian_exp: size mismatch");
  const auto [root, inv_root] = sqrt_and_inv_sqrt(base);
  const Matrix whitened = inv_root * tangent * inv_root;
  const Matrix exped = spectral_map(0.5 * (whitened + whitened.transpose()),
                                    [](double v) { return std::exp(v); });
  Matrix out = root * exped * root;
  out = 0.5 * (out + out.transpose().eval());
  return SPDMatrix(std::move(out));
}

Matrix tangent_project(const Matrix& ambient_grad, const SPDMatrix& base) {
  if (ambient_grad.rows() != base.size() || ambient_grad.cols() != base.size())
    throw std::invalid_argument("tangent_project: size mismatch");
  return 0.5 * (ambient_grad + ambient_grad.transpose());
}

PoseDecomposition decompose(const SPDMatrix& sigma) {
  const EigenSplit split = eigen_split(sigma.values);
  const Eigen::Index n = split.eigenvalues.size();
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    if (split.eigenvalues(i + 1) - split.eigenvalues(i) < 1e-10)
      throw std::invalid_argument("decompose: repeated eigenvalues, frame is degenerate");

  // Descending eigenvalue order, then a deterministic sign per column.
  Matrix frame(n, n);
  Vector translation(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    translation(i) = std::log(split.eigenvalues(n - 1 - i));
    frame.col(i) = split.vectors.col(n - 1 - i);
    Eigen::Index lead = 0;
    for (Eigen::Index r = 1; r < n; ++r)
      if (std::abs(frame(r, i)) > std::abs(frame(lead, i))) lead = r;
    if (frame(lead, i) < 0.0) frame.col(i) = -frame.col(i);
  }

  // Givens reduction of the frame; the captured plane angles are the rotation
  // coordinates. n = 1 has no rotational part.
  Vector rotation(n * (n - 1) / 2);
  Eigen::Index slot = 0;
  Matrix q = frame;
  for (Eigen::Index col = 0; col < n - 1; ++col) {
    for (Eigen::Index row = col + 1; row < n; ++row) {
      const double a = q(col, col);
      const double b = q(row, col);
      const double angle = std::atan2(b, a);
      rotation(slot++) = wrap_angle(angle);
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      for (Eigen::Index k = 0; k < n; ++k) {
        const double top = q(col, k);
        const double bottom = q(row, k);
        q(col, k) = c * top + s * bottom;
        q(row, k) = -s * top + c * bottom;
      }
    }
  }
  return PoseDecomposition{std::move(translation), std::move(rotation)};
}

double wrap_angle(double angle) {
  angle = std::fmod(angle, 2.0 * kPi);
  if (angle > kPi) angle -= 2.0 * kPi;
  if (angle <= -kPi) angle += 2.0 * kPi;
  return angle;
}

PoseDecomposition pose_with_brownian(const PoseDecomposition& mean_pose,
                                     std::pair<double, double> scales, RandomSource& rng) {
  PoseDecomposition out = mean_pose;
  for (Eigen::Index i = 0; i < out.translation.size(); ++i)
    out.translation(i) += scales.first * rng.normal();
  for (Eigen::Index i = 0; i < out.rotation.size(); ++i)
    out.rotation(i) = wrap_angle(out.rotation(i) + scales.second * rng.normal());
  return out;
}

namespace {

double vector_distortion(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relaxability_check: pair size mismatch");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

// Mean ratio iff the relative spread stays within tol; nullopt otherwise.
std::optional<double> proportionality_ratio(
    const std::vector<std::pair<Vector, Vector>>& pairs,
    const std::function<Vector(const Vector&)>& f, double tol) {
  std::vector<double> ratios;
  for (const auto& [a, b] : pairs) {
    const double d = vector_distortion(a, b);
    const double image = vector_distortion(f(a), f(b));
    if (d == 0.0) {
      if (image > 1e-14)
        throw std::invalid_argument(
            "relaxability_check: zero-distortion pair maps to nonzero image distortion");
      continue;
    }
    ratios.push_back(image / d);
  }
  if (ratios.size() < 2)
    throw std::invalid_argument("relaxability_check: need >= 2 pairs with nonzero distortion");
  double lo = ratios.front(), hi = ratios.front(), sum = 0.0;
  for (double r : ratios) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r;
  }
  const double mean = sum / static_cast<double>(ratios.size());
  if (mean == 0.0) return (hi - lo) == 0.0 ? std::optional<double>(0.0) : std::nullopt;
  if ((hi - lo) / mean > tol) return std::nullopt;
  return mean;
}

}  // namespace

std::optional<std::pair<double, double>> relaxability_check(
    const std::vector<std::pair<Vector, Vector>>& pairs_t,
    const std::vector<std::pair<Vector, Vector>>& pairs_r,
    const std::function<Vector(const Vector&)>& f, double tol) {
  const auto eta_t = proportionality_ratio(pairs_t, f, tol);
  if (!eta_t) return std::nullopt;
  const auto eta_r = proportionality_ratio(pairs_r, f, tol);
  if (!eta_r) return std::nullopt;
  return std::make_pair(*eta_t, *eta_r);
}

}  // namespace sparsekey
