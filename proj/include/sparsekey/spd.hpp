#pragma once

#include "sparsekey/core.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace sparsekey {

/// Symmetric positive definite matrix of size <= 16. Construction validates
/// symmetry (1e-10) and strict positivity of the spectrum.
struct SPDMatrix {
  Matrix values;

  explicit SPDMatrix(Matrix v);
  Eigen::Index size() const { return values.rows(); }
};

/// Log-scale / frame-angle split of an SPD matrix.
struct PoseDecomposition {
  Vector translation;  // log eigenvalues, sorted descending
  Vector rotation;     // Givens angles of the eigenvector frame, in (-pi, pi]
};

/// Affine-invariant logarithmic map:
/// base^{1/2} log(base^{-1/2} point base^{-1/2}) base^{1/2}.
/// Whitened eigenvalues are clamped below at 1e-12 before the log.
Matrix riemannian_log(const SPDMatrix& base, const SPDMatrix& point);

/// Inverse map: base^{1/2} exp(base^{-1/2} tangent base^{-1/2}) base^{1/2}.
SPDMatrix riemannian_exp(const SPDMatrix& base, const Matrix& tangent);

/// Orthogonal projection onto the tangent space at an SPD point, which is the
/// symmetric matrices: (G + G^T) / 2.
Matrix tangent_project(const Matrix& ambient_grad, const SPDMatrix& base);

/// Eigenvalue/eigenvector split with deterministic sign fixing (each
/// eigenvector's largest-magnitude entry is made positive, lowest index on
/// ties). Throws on eigenvalues closer than 1e-10 (degenerate frame).
PoseDecomposition decompose(const SPDMatrix& sigma);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Adds Brownian displacements to both parts of a pose; angles are wrapped.
PoseDecomposition pose_with_brownian(const PoseDecomposition& mean_pose,
                                     std::pair<double, double> scales, RandomSource& rng);

/// Empirical proportionality test: the map f is relaxable when the distortion
/// ratio D(f(a), f(b)) / D(a, b) is constant over both probe lists. Returns
/// the mean ratios (eta_T, eta_R) when the relative spread stays within tol on
/// each list, nothing otherwise. A zero-distortion pair with nonzero image
/// distortion is inconsistent and throws.
std::optional<std::pair<double, double>> relaxability_check(
    const std::vector<std::pair<Vector, Vector>>& pairs_t,
    const std::vector<std::pair<Vector, Vector>>& pairs_r,
    const std::function<Vector(const Vector&)>& f, double tol);

}  // namespace sparsekey
