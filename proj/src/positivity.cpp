#include "sparsekey/positivity.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsekey {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double poisson_kernel(double rho, double dtheta) {
  return (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(dtheta) + rho * rho);
}

// Euclidean projection onto the probability simplex (sort-based).
Vector project_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double running = 0.0;
  double tau = u[0] - 1.0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    running += u[static_cast<std::size_t>(k - 1)];
    const double t = (running - 1.0) / static_cast<double>(k);
    if (u[static_cast<std::size_t>(k - 1)] - t > 0.0) tau = t;
  }
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(0.0, v(i) - tau);
  return out;
}

}  // namespace

CircleMeasure::CircleMeasure(std::vector<Atom> a) : atoms(std::move(a)) {
  if (atoms.empty()) throw std::invalid_argument("CircleMeasure: no atoms");
  double sum = 0.0;
  for (const Atom& atom : atoms) {
    if (atom.weight < 0.0) throw std::invalid_argument("CircleMeasure: negative weight");
    if (atom.angle < 0.0 || atom.angle >= kTwoPi)
      throw std::invalid_argument("CircleMeasure: angle must lie in [0, 2*pi)");
    sum += atom.weight;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("CircleMeasure: weights must sum to 1");
}

CircleMeasure CircleMeasure::uniform(int n_atoms) {
  if (n_atoms < 1) throw std::invalid_argument("CircleMeasure::uniform: need at least one atom");
  std::vector<Atom> atoms(static_cast<std::size_t>(n_atoms));
  for (int k = 0; k < n_atoms; ++k)
    atoms[static_cast<std::size_t>(k)] = {kTwoPi * k / n_atoms, 1.0 / n_atoms};
  return CircleMeasure(std::move(atoms));
}

DiskField::DiskField(Matrix g, double rho_max_) : grid(std::move(g)), rho_max(rho_max_) {
  if (grid.rows() < 2 || grid.cols() < 1) throw std::invalid_argument("DiskField: grid too small");
  if (!(rho_max > 0.0) || rho_max > 0.95)
    throw std::invalid_argument("DiskField: rho_max must lie in (0, 0.95]");
  if (!grid.allFinite()) throw std::invalid_argument("DiskField: entries must be finite");
}

double DiskField::angular_spacing() const { return kTwoPi / static_cast<double>(grid.cols()); }

DiskField DiskField::sample(int n_radial, int n_angular, double rho_max,
                            const std::function<double(double, double)>& fn) {
  Matrix grid(n_radial, n_angular);
  const double h = rho_max / static_cast<double>(n_radial - 1);
  const double dt = kTwoPi / static_cast<double>(n_angular);
  for (int i = 0; i < n_radial; ++i)
    for (int j = 0; j < n_angular; ++j) grid(i, j) = fn(i * h, j * dt);
  return DiskField(std::move(grid), rho_max);
}

double poisson_integral(const CircleMeasure& mu, double rho, double theta) {
  if (!(rho >= 0.0) || rho >= 1.0)
    throw std::invalid_argument("poisson_integral: rho must lie in [0, 1)");
  double value = 0.0;
  for (const CircleMeasure::Atom& atom : mu.atoms)
    value += atom.weight * poisson_kernel(rho, theta - atom.angle);
  return value;
}

std::complex<double> herglotz_kernel(std::complex<double> z, double theta_prime) {
  if (std::abs(z) >= 1.0) throw std::invalid_argument("herglotz_kernel: need |z| < 1");
  const std::complex<double> w = z * std::polar(1.0, -theta_prime);
  return (1.0 + w) / (1.0 - w);
}

std::complex<double> herglotz_boundary_form(double theta, double theta_prime) {
  const double half = 0.5 * (theta - theta_prime);
  const std::complex<double> phase = std::polar(1.0, half);
  const std::complex<double> numerator = phase * (2.0 * std::cos(half));
  const std::complex<double> denominator = phase * std::complex<double>(0.0, -2.0 * std::sin(half));
  return numerator / denominator;
}

double harmonic_residual(const DiskField& field) {
  const Eigen::Index nr = field.radial_count();
  const Eigen::Index nt = field.angular_count();
  if (nr < 5 || nt < 8) throw std::invalid_argument("harmonic_residual: grid must be at least 5x8");
  const double h = field.radial_spacing();
  const double dt = field.angular_spacing();
  const Matrix& u = field.grid;

  double worst = 0.0;

  // Center: 4 * (ring average - center) / h^2; the center row holds one
  // physical point, use its angular mean for robustness.
  {
    const double center = u.row(0).mean();
    const double ring = u.row(1).mean();
    worst = std::max(worst, std::abs(4.0 * (ring - center) / (h * h)));
  }

  for (Eigen::Index i = 1; i < nr; ++i) {
    const double rho = static_cast<double>(i) * h;
    for (Eigen::Index j = 0; j < nt; ++j) {
      const Eigen::Index jp = (j + 1) % nt;
      const Eigen::Index jm = (j + nt - 1) % nt;
      double u_rr, u_r;
      if (i + 1 < nr) {
        u_rr = (u(i + 1, j) - 2.0 * u(i, j) + u(i - 1, j)) / (h * h);
        u_r = (u(i + 1, j) - u(i - 1, j)) / (2.0 * h);
      } else {
        // One-sided second-order stencils on the outer ring.
        u_rr = (2.0 * u(i, j) - 5.0 * u(i - 1, j) + 4.0 * u(i - 2, j) - u(i - 3, j)) / (h * h);
        u_r = (3.0 * u(i, j) - 4.0 * u(i - 1, j) + u(i - 2, j)) / (2.0 * h);
      }
      const double u_tt = (u(i, jp) - 2.0 * u(i, j) + u(i, jm)) / (dt * dt);
      const double lap = u_rr + u_r / rho + u_tt / (rho * rho);
      worst = std::max(worst, std::abs(lap));
    }
  }
  return worst;
}

double poisson_residual_bound(int n_radial, int n_angular, double rho_max) {
  const double h = rho_max / static_cast<double>(n_radial - 1);
  const double dt = kTwoPi / static_cast<double>(n_angular);
  const double gap = 1.0 - rho_max;
  // Every derivative of the kernel up to fourth order is controlled by
  // 48 / gap^5 at distance gap from the circle; the stencil constants and the
  // 1/rho^2 angular weight stay inside the prefactor.
  return 12.0 * (h * h + dt * dt) / (gap * gap * gap * gap * gap);
}

bool positivity_check(const DiskField& field) {
  return (field.grid.array() > 0.0).all();
}

MeasureFit fit_measure(const std::vector<BoundarySample>& samples, int n_atoms, int iters) {
  if (samples.empty()) throw std::invalid_argument("fit_measure: no samples");
  if (n_atoms < 1 || n_atoms > 128)
    throw std::invalid_argument("fit_measure: n_atoms must lie in [1,128]");
  if (iters < 1) throw std::invalid_argument("fit_measure: iters must be >= 1");
  for (const BoundarySample& s : samples)
    if (!(s.rho >= 0.0) || s.rho > 0.95)
      throw std::invalid_argument("fit_measure: samples must have rho <= 0.95");

  const Eigen::Index ns = static_cast<Eigen::Index>(samples.size());
  Matrix design(ns, n_atoms);
  Vector target(ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    target(s) = samples[static_cast<std::size_t>(s)].value;
    for (int k = 0; k < n_atoms; ++k) {
      const double atom_angle = kTwoPi * k / n_atoms;
      design(s, k) = poisson_kernel(samples[static_cast<std::size_t>(s)].rho,
                                    samples[static_cast<std::size_t>(s)].theta - atom_angle);
    }
  }
  auto residual_of = [&](const Vector& w) {
    return (design * w - target).squaredNorm() / static_cast<double>(ns);
  };

  Vector weights = Vector::Constant(n_atoms, 1.0 / n_atoms);
  double residual = residual_of(weights);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(iters));
  double step = 1.0;
  for (int it = 0; it < iters; ++it) {
    const Vector grad = 2.0 / static_cast<double>(ns) * design.transpose() * (design * weights - target);
    bool moved = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const Vector cand = project_simplex(weights - step * grad);
      const double cand_residual = residual_of(cand);
      if (cand_residual <= residual) {
        weights = cand;
        residual = cand_residual;
        moved = true;
        step *= 2.0;  // gentle growth after a success
        break;
      }
      step *= 0.5;
    }
    history.push_back(residual);
    if (!moved && step < 1e-16) break;
  }

  std::vector<CircleMeasure::Atom> atoms(static_cast<std::size_t>(n_atoms));
  double total = 0.0;
  for (int k = 0; k < n_atoms; ++k) total += weights(k);
  for (int k = 0; k < n_atoms; ++k)
    atoms[static_cast<std::size_t>(k)] = {kTwoPi * k / n_atoms, std::max(0.0, weights(k)) / total};
  return MeasureFit{CircleMeasure(std::move(atoms)), residual, std::move(history)};
}

BochnerResult bochner_check(const std::function<double(double)>& kernel,
                            const std::vector<double>& probe_points, double tol) {
  if (probe_points.size() < 2)
    throw std::invalid_argument("bochner_check: need at least two probe points");
  const Eigen::Index n = static_cast<Eigen::Index>(probe_points.size());
  Matrix gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = kernel(probe_points[static_cast<std::size_t>(i)] -
                              probe_points[static_cast<std::size_t>(j)]);
      if (!std::isfinite(v)) throw std::invalid_argument("bochner_check: kernel value not finite");
      gram(i, j) = v;
    }
  const Matrix sym = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  const double min_eig = solver.eigenvalues()(0);
  return BochnerResult{min_eig >= -tol, min_eig};
}

}  // namespace sparsekey
