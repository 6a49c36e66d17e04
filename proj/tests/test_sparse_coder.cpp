#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsekey/sparse_coder.hpp"

#include <Eigen/QR>

#include <cmath>

using namespace sparsekey;

namespace {

Matrix random_unit_atoms(int n, int m, RandomSource& rng) {
  Matrix atoms(n, m);
  for (int j = 0; j < m; ++j) {
    Vector col(n);
    for (int i = 0; i < n; ++i) col(i) = rng.normal();
    atoms.col(j) = col / col.norm();
  }
  return atoms;
}

double column_residual(const Matrix& atoms, const Vector& x, const Vector& coeffs) {
  return (x - atoms * coeffs).norm();
}

}  // namespace

TEST_CASE("encode recovers an exactly sparse signal under orthonormal atoms") {
  RandomSource rng(101);
  const int n = 6;
  Matrix gauss = random_unit_atoms(n, n, rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  const Dictionary dict(q, n);

  Matrix truth = Matrix::Zero(n, 5);
  for (int j = 0; j < 5; ++j) {
    truth(rng.uniform_int(n), j) = 1.0 + rng.uniform01();
    truth((j + 3) % n, j) = -0.5 - rng.uniform01();
  }
  const DataBatch data(q * truth);
  const SparseCode code = sparse_encode(dict, data, 2);
  CHECK((dict.atoms * code.coefficients - data.values).norm() < 1e-9);
}

TEST_CASE("single-atom encode matches exhaustive search") {
  RandomSource rng(102);
  for (int trial = 0; trial < 20; ++trial) {
    const Dictionary dict(random_unit_atoms(2, 3, rng), 3);
    Matrix x(2, 1);
    x << rng.normal(), rng.normal();
    const DataBatch data(x);
    const SparseCode code = sparse_encode(dict, data, 1);

    // Oracle: all three single-atom least squares fits.
    double best = std::numeric_limits<double>::infinity();
    for (int atom = 0; atom < 3; ++atom) {
      const double coeff = dict.atoms.col(atom).dot(x.col(0));
      best = std::min(best, (x.col(0) - coeff * dict.atoms.col(atom)).norm());
    }
    const double got = column_residual(dict.atoms, x.col(0), code.coefficients.col(0));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("full budget reaches the least squares residual") {
  RandomSource rng(103);
  const Dictionary dict(random_unit_atoms(5, 3, rng), 3);
  Matrix x(5, 1);
  for (int i = 0; i < 5; ++i) x(i, 0) = rng.normal();
  const SparseCode code = sparse_encode(dict, DataBatch(x), 3);

  const Vector ls = dict.atoms.colPivHouseholderQr().solve(x.col(0));
  const double ls_residual = (x.col(0) - dict.atoms * ls).norm();
  const double got = column_residual(dict.atoms, x.col(0), code.coefficients.col(0));
  CHECK(got == doctest::Approx(ls_residual).epsilon(1e-9));
}

TEST_CASE("encode rejects bad budgets and enforces the per-column budget") {
  RandomSource rng(104);
  const Dictionary dict(random_unit_atoms(4, 6, rng), 6);
  const DataBatch data(random_unit_atoms(4, 10, rng));
  CHECK_THROWS_AS(sparse_encode(dict, data, 7), std::invalid_argument);
  CHECK_THROWS_AS(sparse_encode(dict, data, 0), std::invalid_argument);

  for (int trial = 0; trial < 1000; ++trial) {
    RandomSource local(2000 + trial);
    const int n = 2 + local.uniform_int(4);
    const int m = 2 + local.uniform_int(6);
    const int budget = 1 + local.uniform_int(m);
    const Dictionary d(random_unit_atoms(n, m, local), m);
    Matrix x(n, 2);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < n; ++i) x(i, j) = local.normal();
    const SparseCode code = sparse_encode(d, DataBatch(x), budget);
    for (int j = 0; j < 2; ++j) {
      int nnz = 0;
      for (int i = 0; i < m; ++i)
        if (code.coefficients(i, j) != 0.0) ++nnz;
      CHECK(nnz <= budget);
    }
  }
}

TEST_CASE("greedy residual is non-increasing in the budget") {
  RandomSource rng(105);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4, m = 6;
    const Dictionary dict(random_unit_atoms(n, m, rng), m);
    Matrix x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.normal();
    const DataBatch data(x);
    double previous = x.col(0).norm();
    for (int budget = 1; budget <= m; ++budget) {
      const SparseCode code = sparse_encode(dict, data, budget);
      const double residual = column_residual(dict.atoms, x.col(0), code.coefficients.col(0));
      CHECK(residual <= previous + 1e-12);
      previous = residual;
    }
  }
}

TEST_CASE("encode is deterministic") {
  RandomSource rng(106);
  const Dictionary dict(random_unit_atoms(5, 8, rng), 8);
  const DataBatch data(random_unit_atoms(5, 7, rng));
  const SparseCode a = sparse_encode(dict, data, 3);
  const SparseCode b = sparse_encode(dict, data, 3);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturb_code: zero scale is the identity, support never changes") {
  RandomSource rng(107);
  const Dictionary dict(random_unit_atoms(4, 6, rng), 6);
  const DataBatch data(random_unit_atoms(4, 5, rng));
  const SparseCode code = sparse_encode(dict, data, 2);

  RandomSource noise(1);
  const SparseCode same = perturb_code(code, PerturbationModel{0.0}, noise);
  CHECK((same.coefficients - code.coefficients).cwiseAbs().maxCoeff() == 0.0);

  for (int draw = 0; draw < 100; ++draw) {
    const SparseCode shifted = perturb_code(code, PerturbationModel{0.7}, noise);
    for (Eigen::Index j = 0; j < code.coefficients.cols(); ++j)
      for (Eigen::Index i = 0; i < code.coefficients.rows(); ++i)
        CHECK((shifted.coefficients(i, j) != 0.0) == (code.coefficients(i, j) != 0.0));
  }
}

TEST_CASE("perturb_code noise statistics match sigma_theta") {
  Matrix one(1, 1);
  one << 2.5;
  const SparseCode code(one, 1);
  const double sigma = 0.8;
  RandomSource rng(108);
  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    const SparseCode draw = perturb_code(code, PerturbationModel{sigma}, rng);
    const double delta = draw.coefficients(0, 0) - 2.5;
    sum += delta;
    sum_sq += delta * delta;
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.03));
  // Unbiasedness: the empirical mean shift stays within 4 standard errors.
  CHECK(std::abs(mean) <= 4.0 * sigma / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("expected_distortion closed form and scaling") {
  RandomSource rng(109);
  const int m = 4, cols = 5, budget = 2;
  Matrix coeffs = Matrix::Zero(m, cols);
  for (int j = 0; j < cols; ++j) {
    coeffs(j % m, j) = 1.0;
    coeffs((j + 1) % m, j) = -1.0;
  }
  const SparseCode code(coeffs, budget);

  RandomSource zero_rng(1);
  CHECK(expected_distortion(code, PerturbationModel{0.0}, 100, zero_rng).mean == 0.0);

  // supported/total = 10/20, so the mean distortion is s^2 / 2.
  const double s = 0.6;
  RandomSource mc_rng(110);
  const MonteCarloEstimate est = expected_distortion(code, PerturbationModel{s}, 100000, mc_rng);
  CHECK(est.mean == doctest::Approx(0.5 * s * s).epsilon(0.05));
  CHECK(est.std_error > 0.0);

  RandomSource mc_rng2(111);
  const MonteCarloEstimate doubled =
      expected_distortion(code, PerturbationModel{2.0 * s}, 100000, mc_rng2);
  CHECK(doubled.mean == doctest::Approx(4.0 * est.mean).epsilon(0.10));
}

TEST_CASE("dictionary_update: zero code leaves the dictionary unchanged") {
  RandomSource rng(112);
  const Dictionary dict(random_unit_atoms(4, 5, rng), 5);
  const DataBatch data(random_unit_atoms(4, 6, rng));
  const SparseCode zero(Matrix::Zero(5, 6), 2);
  const Dictionary updated = dictionary_update(dict, data, zero, 0.5);
  CHECK((updated.atoms - dict.atoms).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dictionary_update never increases the objective") {
  for (int trial = 0; trial < 100; ++trial) {
    RandomSource rng(300 + trial);
    const int n = 3 + rng.uniform_int(3);
    const int m = 3 + rng.uniform_int(4);
    const int cols = 4 + rng.uniform_int(5);
    const Dictionary dict(random_unit_atoms(n, m, rng), m);
    Matrix x(n, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
    const DataBatch data(x);
    const SparseCode code = sparse_encode(dict, data, std::min(2, m));

    const double before = reconstruction_objective(data, dict, code, 0.0);
    const Dictionary updated = dictionary_update(dict, data, code, 1.0);
    const double after = reconstruction_objective(data, updated, code, 0.0);
    CHECK(after <= before + 1e-12);
  }
}

TEST_CASE("dictionary_update converges to the normalized data vector") {
  RandomSource rng(113);
  Matrix x(3, 1);
  x << 2.0, -1.0, 0.5;
  const DataBatch data(x);
  Matrix coeff(1, 1);
  coeff << 1.0;
  const SparseCode code(coeff, 1);

  Matrix atom(3, 1);
  atom << 0.0, 0.0, 1.0;
  Dictionary dict(atom, 1);
  for (int step = 0; step < 200; ++step) dict = dictionary_update(dict, data, code, 0.5);
  const Vector target = x.col(0) / x.col(0).norm();
  CHECK((dict.atoms.col(0) - target).norm() < 1e-6);
}

TEST_CASE("solve_p1 recovers a planted sparse model") {
  // Planted dictionary with pairwise coherence capped at 0.4: in eight
  // dimensions an uncapped random dozen of atoms is routinely too coherent
  // for any pursuit to identify, so the cap is what makes zero achievable.
  const int n = 8, m = 12, budget = 2, cols = 200;
  RandomSource gen(1);
  Matrix truth_atoms(n, m);
  for (bool filled = false; !filled;) {
    filled = true;
    for (int j = 0; j < m && filled; ++j) {
      bool placed = false;
      for (int attempt = 0; attempt < 5000 && !placed; ++attempt) {
        Vector col(n);
        for (int i = 0; i < n; ++i) col(i) = gen.normal();
        col /= col.norm();
        bool ok = true;
        for (int prev = 0; prev < j && ok; ++prev)
          if (std::abs(col.dot(truth_atoms.col(prev))) > 0.4) ok = false;
        if (ok) {
          truth_atoms.col(j) = col;
          placed = true;
        }
      }
      filled = placed;
    }
  }
  Matrix data = Matrix::Zero(n, cols);
  for (int j = 0; j < cols; ++j) {
    const int first = gen.uniform_int(m);
    int second = gen.uniform_int(m);
    while (second == first) second = gen.uniform_int(m);
    const double c1 = (gen.uniform01() < 0.5 ? -1.0 : 1.0) * (0.5 + gen.uniform01());
    const double c2 = (gen.uniform01() < 0.5 ? -1.0 : 1.0) * (0.5 + gen.uniform01());
    data.col(j) = c1 * truth_atoms.col(first) + c2 * truth_atoms.col(second);
  }

  Thresholds thresholds;
  thresholds.lambda0 = m;
  thresholds.lambda1 = budget;
  RandomSource rng(1001);
  const P1Solution sol = solve_p1(DataBatch(data), thresholds, PerturbationModel{0.0}, 400, rng);

  CHECK(sol.objective_history.back() < 1e-6);
  for (std::size_t k = 1; k < sol.objective_history.size(); ++k)
    CHECK(sol.objective_history[k] <= sol.objective_history[k - 1] + 1e-9);
  for (Eigen::Index j = 0; j < sol.code.sample_count(); ++j) {
    int nnz = 0;
    for (Eigen::Index i = 0; i < sol.code.atom_count(); ++i)
      if (sol.code.coefficients(i, j) != 0.0) ++nnz;
    CHECK(nnz <= budget);
  }
}

TEST_CASE("solve_p1 with a saturated budget fits exactly when n <= m") {
  RandomSource gen(116);
  const int n = 4, m = 6, cols = 12;
  Matrix data(n, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < n; ++i) data(i, j) = gen.normal();

  Thresholds thresholds;
  thresholds.lambda0 = m;
  thresholds.lambda1 = m;
  RandomSource rng(117);
  const P1Solution sol = solve_p1(DataBatch(data), thresholds, PerturbationModel{0.0}, 120, rng);
  CHECK(sol.objective_history.back() < 1e-9);
}

TEST_CASE("solve_p1 is deterministic under a fixed seed") {
  RandomSource gen(118);
  Matrix data(4, 20);
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 4; ++i) data(i, j) = gen.normal();
  Thresholds thresholds;
  thresholds.lambda0 = 6;
  thresholds.lambda1 = 2;

  RandomSource a(5), b(5);
  const P1Solution sa = solve_p1(DataBatch(data), thresholds, PerturbationModel{0.1}, 30, a);
  const P1Solution sb = solve_p1(DataBatch(data), thresholds, PerturbationModel{0.1}, 30, b);
  CHECK((sa.code.coefficients - sb.code.coefficients).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sa.dictionary.atoms - sb.dictionary.atoms).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(sa.objective_history.size() == sb.objective_history.size());
  for (std::size_t k = 0; k < sa.objective_history.size(); ++k)
    CHECK(sa.objective_history[k] == sb.objective_history[k]);
}
