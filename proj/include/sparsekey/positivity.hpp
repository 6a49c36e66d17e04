#pragma once

#include "sparsekey/core.hpp"

#include <complex>
#include <functional>

namespace sparsekey {

/// Discrete probability measure on the unit circle.
struct CircleMeasure {
  struct Atom {
    double angle;   // in [0, 2*pi)
    double weight;  // >= 0
  };
  std::vector<Atom> atoms;

  explicit CircleMeasure(std::vector<Atom> a);

  /// n equal atoms at equispaced angles.
  static CircleMeasure uniform(int n_atoms);
};

/// Scalar field on a polar grid over the disk of radius rho_max <= 0.95.
/// Radial nodes run from 0 to rho_max inclusive (rows), angular nodes are
/// equispaced on [0, 2*pi) (columns).
struct DiskField {
  Matrix grid;
  double rho_max;

  DiskField(Matrix g, double rho_max_);

  Eigen::Index radial_count() const { return grid.rows(); }
  Eigen::Index angular_count() const { return grid.cols(); }
  double radial_spacing() const { return rho_max / static_cast<double>(grid.rows() - 1); }
  double angular_spacing() const;

  /// Field sampled from a function of (rho, theta).
  static DiskField sample(int n_radial, int n_angular, double rho_max,
                          const std::function<double(double, double)>& fn);
};

/// Poisson integral of the measure at the interior point (rho, theta):
/// sum_k w_k (1 - rho^2) / (1 - 2 rho cos(theta - theta'_k) + rho^2).
double poisson_integral(const CircleMeasure& mu, double rho, double theta);

/// Herglotz kernel (1 + z e^{-i theta'}) / (1 - z e^{-i theta'}) for |z| < 1.
/// Its real part is the Poisson kernel at (|z|, arg z).
std::complex<double> herglotz_kernel(std::complex<double> z, double theta_prime);

/// Boundary half-angle factorization of the Herglotz kernel at z = e^{i
/// theta}: with x = theta - theta', both the numerator 1 + e^{ix} and the
/// denominator 1 - e^{ix} split off a common e^{ix/2} factor, leaving
/// 2 cos(x/2) against -2i sin(x/2). Evaluates that factored form; away from
/// the x = 0 pole it reproduces the direct boundary quotient.
std::complex<double> herglotz_boundary_form(double theta, double theta_prime);

/// Max absolute discrete polar Laplacian over the grid (5-point stencil, the
/// second differences normalized by their spacings squared; one-sided radial
/// stencil on the outer ring, angular averaging at the center). Zero for
/// harmonic fields up to truncation error.
double harmonic_residual(const DiskField& field);

/// Second-order truncation bound for the residual of a Poisson field of any
/// probability measure on the given grid: all fourth derivatives are bounded
/// by 48 / (1 - rho_max)^5, so the defect is below
/// 8 (h^2 + dtheta^2) / (1 - rho_max)^5 with room to spare.
double poisson_residual_bound(int n_radial, int n_angular, double rho_max);

/// True iff every grid value is strictly positive.
bool positivity_check(const DiskField& field);

struct BoundarySample {
  double rho;
  double theta;
  double value;
};

struct MeasureFit {
  CircleMeasure measure;
  double residual;                      // final mean squared misfit
  std::vector<double> residual_history;  // one value per iteration
};

/// Least squares on the weight simplex with fixed equispaced atoms, solved by
/// projected gradient with backtracking; the residual never increases.
MeasureFit fit_measure(const std::vector<BoundarySample>& samples, int n_atoms, int iters);

struct BochnerResult {
  bool positive_semidefinite;
  double min_eigenvalue;
};

/// Gram-matrix positive-definiteness test for a stationary kernel handle:
/// K[i][j] = kernel(x_i - x_j) must have min symmetric eigenvalue >= -tol.
BochnerResult bochner_check(const std::function<double(double)>& kernel,
                            const std::vector<double>& probe_points, double tol);

}  // namespace sparsekey
