#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsekey/positivity.hpp"

#include <cmath>

using namespace sparsekey;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

CircleMeasure random_measure(int max_atoms, RandomSource& rng) {
  const int count = 1 + rng.uniform_int(max_atoms);
  std::vector<CircleMeasure::Atom> atoms(static_cast<std::size_t>(count));
  double sum = 0.0;
  for (auto& atom : atoms) {
    atom.angle = rng.uniform01() * kTwoPi;
    atom.weight = 0.05 + rng.uniform01();
    sum += atom.weight;
  }
  for (auto& atom : atoms) atom.weight /= sum;
  return CircleMeasure(atoms);
}

}  // namespace

TEST_CASE("poisson_integral hand values") {
  RandomSource rng(41);
  const CircleMeasure mu = random_measure(6, rng);
  CHECK(poisson_integral(mu, 0.0, 1.234) == doctest::Approx(1.0).epsilon(1e-14));

  const CircleMeasure atom({{0.0, 1.0}});
  CHECK(poisson_integral(atom, 0.5, 0.0) == doctest::Approx(3.0).epsilon(1e-14));

  CHECK_THROWS_AS(poisson_integral(atom, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("uniform discrete measure is flat to quadrature accuracy") {
  const CircleMeasure uniform = CircleMeasure::uniform(64);
  // The 64-atom average kills every harmonic except multiples of 64, so the
  // deviation from 1 is 2 sum_k rho^{64 k}: below 1e-3 for rho <= 0.85 and
  // below 2.5e-3 at rho = 0.9.
  double worst_085 = 0.0;
  double worst_09 = 0.0;
  for (int ri = 0; ri <= 20; ++ri) {
    for (int ti = 0; ti < 32; ++ti) {
      const double theta = kTwoPi * ti / 32.0;
      const double rho85 = 0.85 * ri / 20.0;
      worst_085 = std::max(worst_085, std::abs(poisson_integral(uniform, rho85, theta) - 1.0));
      const double rho90 = 0.90 * ri / 20.0;
      worst_09 = std::max(worst_09, std::abs(poisson_integral(uniform, rho90, theta) - 1.0));
    }
  }
  CHECK(worst_085 <= 1e-3);
  CHECK(worst_09 <= 2.5e-3);
}

TEST_CASE("poisson kernel has unit mean at every radius") {
  for (double rho : {0.0, 0.3, 0.7, 0.9, 0.95}) {
    const int n_quad = 4096;
    double mean = 0.0;
    for (int k = 0; k < n_quad; ++k) {
      const double theta_prime = kTwoPi * k / n_quad;
      mean += (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(0.7 - theta_prime) + rho * rho);
    }
    mean /= n_quad;
    CHECK(std::abs(mean - 1.0) <= 1e-6);
  }
}

TEST_CASE("herglotz kernel") {
  CHECK(herglotz_kernel({0.0, 0.0}, 1.0) == std::complex<double>(1.0, 0.0));
  CHECK(herglotz_kernel({0.5, 0.0}, 0.0).real() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(herglotz_kernel({1.0, 0.0}, 0.0), std::invalid_argument);

  RandomSource rng(42);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double rho = 0.95 * rng.uniform01();
    const double theta = rng.uniform01() * kTwoPi;
    const double theta_prime = rng.uniform01() * kTwoPi;
    const double re = herglotz_kernel(std::polar(rho, theta), theta_prime).real();
    const double poisson =
        (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(theta - theta_prime) + rho * rho);
    worst = std::max(worst, std::abs(re - poisson));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("herglotz boundary half-angle factorization") {
  RandomSource rng(43);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double theta = rng.uniform01() * kTwoPi;
    double theta_prime = rng.uniform01() * kTwoPi;
    // stay away from the boundary pole at theta == theta_prime
    if (std::abs(std::remainder(theta - theta_prime, kTwoPi)) < 0.1) theta_prime += 0.3;
    const std::complex<double> direct =
        (1.0 + std::polar(1.0, theta - theta_prime)) / (1.0 - std::polar(1.0, theta - theta_prime));
    const std::complex<double> factored = herglotz_boundary_form(theta, theta_prime);
    worst = std::max(worst, std::abs(direct - factored));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("harmonic_residual") {
  SUBCASE("constant fields are exactly flat") {
    const DiskField constant = DiskField::sample(16, 32, 0.7, [](double, double) { return 3.5; });
    CHECK(harmonic_residual(constant) == 0.0);
  }

  SUBCASE("rho^2 has Laplacian 4, exactly captured by the stencil") {
    const DiskField quadratic =
        DiskField::sample(64, 128, 0.7, [](double rho, double) { return rho * rho; });
    CHECK(harmonic_residual(quadratic) == doctest::Approx(4.0).epsilon(1e-9));
  }

  SUBCASE("poisson fields are harmonic to the documented truncation bound") {
    RandomSource rng(44);
    const double rho_max = 0.7;
    const double bound = poisson_residual_bound(64, 128, rho_max);
    for (int trial = 0; trial < 50; ++trial) {
      const CircleMeasure mu = random_measure(6, rng);
      const DiskField field = DiskField::sample(64, 128, rho_max, [&](double rho, double theta) {
        return poisson_integral(mu, rho, theta);
      });
      CHECK(harmonic_residual(field) <= bound);
    }
  }

  SUBCASE("the truncation bound shrinks to second order under refinement") {
    RandomSource rng(45);
    const CircleMeasure mu = random_measure(4, rng);
    auto field_fn = [&](double rho, double theta) { return poisson_integral(mu, rho, theta); };
    const double coarse = harmonic_residual(DiskField::sample(32, 64, 0.7, field_fn));
    const double fine = harmonic_residual(DiskField::sample(64, 128, 0.7, field_fn));
    CHECK(fine <= 0.5 * coarse);  // ~4x expected, 2x demanded
  }

  SUBCASE("grid floor") {
    const DiskField tiny = DiskField::sample(4, 8, 0.5, [](double, double) { return 1.0; });
    CHECK_THROWS_AS(harmonic_residual(tiny), std::invalid_argument);
  }
}

TEST_CASE("positivity_check") {
  RandomSource rng(46);
  const CircleMeasure mu = random_measure(5, rng);
  const DiskField field = DiskField::sample(16, 32, 0.7, [&](double rho, double theta) {
    return poisson_integral(mu, rho, theta);
  });
  CHECK(positivity_check(field));

  Matrix grid = field.grid;
  grid(3, 5) = -1e-9;
  CHECK_FALSE(positivity_check(DiskField(grid, 0.7)));

  const DiskField zeros = DiskField::sample(6, 8, 0.5, [](double, double) { return 0.0; });
  CHECK_FALSE(positivity_check(zeros));
}

TEST_CASE("fit_measure") {
  SUBCASE("planted measure on the fit grid is recovered") {
    const int n_atoms = 8;
    std::vector<double> weights(n_atoms, 0.0);
    weights[0] = 0.4;
    weights[2] = 0.3;
    weights[5] = 0.2;
    weights[6] = 0.1;
    std::vector<CircleMeasure::Atom> atoms(n_atoms);
    for (int k = 0; k < n_atoms; ++k)
      atoms[static_cast<std::size_t>(k)] = {kTwoPi * k / n_atoms, weights[static_cast<std::size_t>(k)]};
    const CircleMeasure planted(atoms);

    std::vector<BoundarySample> samples;
    for (int s = 0; s < 64; ++s) {
      const double theta = kTwoPi * s / 64.0;
      samples.push_back({0.8, theta, poisson_integral(planted, 0.8, theta)});
    }
    const MeasureFit fit = fit_measure(samples, n_atoms, 4000);
    CHECK(fit.residual < 1e-8);
    for (int k = 0; k < n_atoms; ++k)
      CHECK(std::abs(fit.measure.atoms[static_cast<std::size_t>(k)].weight -
                     weights[static_cast<std::size_t>(k)]) < 1e-4);
  }

  SUBCASE("constant samples at small radius give near-uniform weights") {
    std::vector<BoundarySample> samples;
    for (int s = 0; s < 48; ++s) samples.push_back({0.2, kTwoPi * s / 48.0, 1.0});
    const MeasureFit fit = fit_measure(samples, 8, 3000);
    CHECK(fit.residual < 1e-10);
    for (const auto& atom : fit.measure.atoms)
      CHECK(atom.weight == doctest::Approx(1.0 / 8.0).epsilon(0.05));
  }

  SUBCASE("a single sample is trivially fittable") {
    const MeasureFit fit = fit_measure({{0.5, 1.0, 1.0}}, 4, 500);
    CHECK(fit.residual < 1e-10);
    double total = 0.0;
    for (const auto& atom : fit.measure.atoms) {
      CHECK(atom.weight >= 0.0);
      total += atom.weight;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("residual history never increases") {
    RandomSource rng(47);
    std::vector<BoundarySample> samples;
    for (int s = 0; s < 32; ++s)
      samples.push_back({0.6, kTwoPi * s / 32.0, 0.5 + rng.uniform01()});
    const MeasureFit fit = fit_measure(samples, 6, 400);
    for (std::size_t k = 1; k < fit.residual_history.size(); ++k)
      CHECK(fit.residual_history[k] <= fit.residual_history[k - 1] + 1e-15);
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(fit_measure({}, 4, 100), std::invalid_argument);
    CHECK_THROWS_AS(fit_measure({{0.97, 0.0, 1.0}}, 4, 100), std::invalid_argument);
  }
}

TEST_CASE("bochner_check") {
  RandomSource rng(48);
  std::vector<double> points(10);
  for (double& p : points) p = 3.0 * rng.normal();

  SUBCASE("gaussian kernel is positive semidefinite") {
    const BochnerResult result =
        bochner_check([](double d) { return std::exp(-0.5 * d * d); }, points, 1e-10);
    CHECK(result.positive_semidefinite);
    CHECK(result.min_eigenvalue >= -1e-10);
  }

  SUBCASE("the all-negative off-diagonal kernel fails with eigenvalue -1") {
    const BochnerResult result = bochner_check(
        [](double d) { return d == 0.0 ? 1.0 : -1.0; }, {0.0, 1.0, 2.0}, 1e-10);
    CHECK_FALSE(result.positive_semidefinite);
    CHECK(result.min_eigenvalue == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("the constant kernel is rank-one PSD") {
    const BochnerResult result = bochner_check([](double) { return 1.0; }, points, 1e-10);
    CHECK(result.positive_semidefinite);
  }

  SUBCASE("translation invariance of the verdict") {
    const auto kernel = [](double d) { return std::exp(-std::abs(d)); };
    const BochnerResult base = bochner_check(kernel, points, 1e-10);
    std::vector<double> shifted = points;
    for (double& p : shifted) p += 17.3;
    const BochnerResult moved = bochner_check(kernel, shifted, 1e-10);
    CHECK(std::abs(base.min_eigenvalue - moved.min_eigenvalue) <= 1e-10);
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(bochner_check([](double) { return 1.0; }, {0.0}, 1e-10),
                    std::invalid_argument);
    CHECK_THROWS_AS(bochner_check([](double d) { return d == 0.0 ? std::nan("") : 1.0; },
                                  {0.0, 1.0}, 1e-10),
                    std::invalid_argument);
  }
}
