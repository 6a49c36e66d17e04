#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsekey/graphon.hpp"

#include <cmath>
#include <random>

using namespace sparsekey;

namespace {

// Independent homomorphism-count oracle: odometer over all vertex maps, no
// pruning, no shared code with the implementation.
long long hom_count_oracle(const SmallGraph& f, const SmallGraph& g) {
  const int nf = f.vertex_count();
  const int ng = g.vertex_count();
  std::vector<int> map(static_cast<std::size_t>(nf), 0);
  long long hits = 0;
  while (true) {
    bool ok = true;
    for (int u = 0; u < nf && ok; ++u)
      for (int v = u + 1; v < nf && ok; ++v)
        if (f.adjacent(u, v) && !g.adjacent(map[static_cast<std::size_t>(u)],
                                            map[static_cast<std::size_t>(v)]))
          ok = false;
    if (ok) ++hits;
    int pos = nf - 1;
    while (pos >= 0) {
      if (++map[static_cast<std::size_t>(pos)] < ng) break;
      map[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return hits;
}

double hom_density_oracle(const SmallGraph& f, const SmallGraph& g) {
  return static_cast<double>(hom_count_oracle(f, g)) /
         std::pow(static_cast<double>(g.vertex_count()), f.vertex_count());
}

SmallGraph random_graph(int n, RandomSource& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform01() < 0.5) edges.emplace_back(u, v);
  return SmallGraph(n, edges);
}

std::vector<int> random_permutation(int n, RandomSource& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
  return perm;
}

}  // namespace

TEST_CASE("hom_density hand values") {
  const SmallGraph edge = SmallGraph::parse("0-1");
  const SmallGraph triangle = SmallGraph::complete(3);
  const SmallGraph vertex = SmallGraph::parse("1:");

  CHECK(hom_density(edge, triangle) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(hom_density(edge, edge) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(hom_density(vertex, triangle) == 1.0);
  CHECK(hom_density(vertex, edge) == 1.0);

  for (int k = 2; k <= 6; ++k)
    CHECK(hom_density(edge, SmallGraph::complete(k)) ==
          doctest::Approx((k - 1.0) / k).epsilon(1e-15));
}

TEST_CASE("hom_density agrees with the brute-force oracle on random pairs") {
  RandomSource rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const SmallGraph f = random_graph(2 + rng.uniform_int(3), rng);
    const SmallGraph g = random_graph(1 + rng.uniform_int(4), rng);
    CHECK(hom_density(f, g) == hom_density_oracle(f, g));
  }
}

TEST_CASE("hom_density rejects oversized pattern graphs") {
  const SmallGraph big(9, {});
  const SmallGraph g = SmallGraph::complete(3);
  CHECK_THROWS_AS(hom_density(big, g), std::invalid_argument);
}

TEST_CASE("density is isomorphism-invariant in both arguments") {
  RandomSource rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const SmallGraph f = random_graph(2 + rng.uniform_int(3), rng);
    const SmallGraph g = random_graph(2 + rng.uniform_int(4), rng);
    const SmallGraph f2 = f.relabel(random_permutation(f.vertex_count(), rng));
    const SmallGraph g2 = g.relabel(random_permutation(g.vertex_count(), rng));
    CHECK(hom_density(f, g) == hom_density(f2, g2));
  }
}

TEST_CASE("density_distortion hand values and isomorphic zero") {
  const SmallGraph edge = SmallGraph::parse("0-1");
  const SmallGraph triangle = SmallGraph::complete(3);
  CHECK(density_distortion(edge, edge, triangle) == 0.0);
  CHECK(density_distortion(edge, triangle, triangle) ==
        doctest::Approx(16.0 / 81.0).epsilon(1e-12));

  RandomSource rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const SmallGraph g1 = random_graph(2 + rng.uniform_int(3), rng);
    const SmallGraph g2 = g1.relabel(random_permutation(g1.vertex_count(), rng));
    const SmallGraph g = random_graph(3 + rng.uniform_int(3), rng);
    CHECK(density_distortion(g1, g2, g) == 0.0);
  }
}

TEST_CASE("minimize_density_gap") {
  const SmallGraph edge = SmallGraph::parse("0-1");
  const SmallGraph path3 = SmallGraph::parse("0-1,1-2");
  const SmallGraph triangle = SmallGraph::complete(3);
  const SmallGraph g = SmallGraph::complete(4);

  SUBCASE("isomorphic pair wins with zero gap") {
    const SmallGraph edge_relabeled = edge.relabel({1, 0});
    std::vector<std::pair<SmallGraph, SmallGraph>> candidates = {
        {edge, triangle}, {edge, edge_relabeled}, {path3, triangle}};
    const DensityGapResult result = minimize_density_gap(candidates, g, 1e-9);
    CHECK(result.best_index == 1);
    CHECK(result.gap == 0.0);
    CHECK(result.within_nu1);
  }

  SUBCASE("single pair returns itself") {
    std::vector<std::pair<SmallGraph, SmallGraph>> single = {{edge, triangle}};
    const DensityGapResult result = minimize_density_gap(single, g, 1e-9);
    CHECK(result.best_index == 0);
  }

  SUBCASE("three pairs ranked by hand-computed gaps") {
    // Gaps against K4 computed from hom_density directly.
    std::vector<std::pair<SmallGraph, SmallGraph>> candidates = {
        {edge, triangle}, {path3, triangle}, {edge, path3}};
    double gaps[3];
    for (int i = 0; i < 3; ++i)
      gaps[i] = density_distortion(candidates[static_cast<std::size_t>(i)].first,
                                   candidates[static_cast<std::size_t>(i)].second, g);
    std::size_t expect = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (gaps[i] < gaps[expect]) expect = i;
    const DensityGapResult result = minimize_density_gap(candidates, g, 1e-9);
    CHECK(result.best_index == expect);
    CHECK(result.gap == doctest::Approx(gaps[expect]).epsilon(1e-15));
  }

  SUBCASE("empty list is an input error") {
    std::vector<std::pair<SmallGraph, SmallGraph>> empty;
    CHECK_THROWS_AS(minimize_density_gap(empty, g, 1e-9), std::invalid_argument);
  }
}

TEST_CASE("binomial_extension") {
  Matrix kernel(2, 2);
  kernel << 0.7, 0.3, 0.4, 0.6;
  const StochasticKernel v(kernel);

  SUBCASE("order one is the identity") {
    const StochasticKernel same = binomial_extension(v, 1);
    CHECK((same.matrix - kernel).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("hand value at order two") {
    const StochasticKernel ext = binomial_extension(v, 2);
    REQUIRE(ext.output_size() == 4);
    // tuple (b0, b1) = (0, 1) sits at column 0 * 2 + 1
    CHECK(ext.matrix(0, 1) == doctest::Approx(0.7 * 0.3).epsilon(1e-15));
    CHECK(ext.matrix(1, 2) == doctest::Approx(0.6 * 0.4).epsilon(1e-15));
  }

  SUBCASE("deterministic kernels extend to the diagonal tuple map") {
    Matrix det(2, 3);
    det << 0, 1, 0, 0, 0, 1;
    const StochasticKernel ext = binomial_extension(StochasticKernel(det), 2);
    for (Eigen::Index col = 0; col < ext.output_size(); ++col) {
      const double expect_a0 = col == 1 * 3 + 1 ? 1.0 : 0.0;  // (1,1)
      const double expect_a1 = col == 2 * 3 + 2 ? 1.0 : 0.0;  // (2,2)
      CHECK(ext.matrix(0, col) == expect_a0);
      CHECK(ext.matrix(1, col) == expect_a1);
    }
  }

  SUBCASE("rows of random extensions sum to one") {
    RandomSource rng(24);
    for (int trial = 0; trial < 30; ++trial) {
      const int na = 1 + rng.uniform_int(3);
      const int nb = 2 + rng.uniform_int(2);
      Matrix k(na, nb);
      for (int i = 0; i < na; ++i) {
        double sum = 0.0;
        for (int j = 0; j < nb; ++j) {
          k(i, j) = 0.01 + rng.uniform01();
          sum += k(i, j);
        }
        for (int j = 0; j < nb; ++j) k(i, j) /= sum;
      }
      const int d = 1 + rng.uniform_int(4);
      const StochasticKernel ext = binomial_extension(StochasticKernel(k), d);
      for (Eigen::Index i = 0; i < ext.input_size(); ++i)
        CHECK(std::abs(ext.matrix.row(i).sum() - 1.0) <= 1e-12);
    }
  }

  SUBCASE("capacity bound") {
    Matrix wide = Matrix::Constant(1, 10, 0.1);
    CHECK_THROWS_AS(binomial_extension(StochasticKernel(wide), 7), std::invalid_argument);
  }
}

TEST_CASE("mutual_information") {
  Matrix product(2, 2);
  product << 0.25, 0.25, 0.25, 0.25;
  CHECK(mutual_information(JointPMF(product)) == 0.0);

  Matrix skewed_product(2, 2);
  skewed_product << 0.06, 0.14, 0.24, 0.56;  // p = (0.3, 0.7) x (0.2, 0.8)
  CHECK(mutual_information(JointPMF(skewed_product)) <= 1e-15);

  Matrix identity(2, 2);
  identity << 0.5, 0.0, 0.0, 0.5;
  CHECK(mutual_information(JointPMF(identity)) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix example(2, 2);
  example << 0.4, 0.1, 0.1, 0.4;
  CHECK(mutual_information(JointPMF(example)) ==
        doctest::Approx(0.27807190511263774).epsilon(1e-12));
}

TEST_CASE("mutual information is nonnegative, zero only near product joints") {
  RandomSource rng(25);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 2 + rng.uniform_int(2);
    const int cols = 2 + rng.uniform_int(2);
    Matrix table(rows, cols);
    double sum = 0.0;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        table(i, j) = 0.001 + rng.uniform01();
        sum += table(i, j);
      }
    table /= sum;
    const JointPMF joint(table);
    const double mi = mutual_information(joint);
    CHECK(mi >= 0.0);
    if (mi <= 1e-12) {
      Vector px = table.rowwise().sum();
      Vector py = table.colwise().sum();
      CHECK((table - px * py.transpose()).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("min_mi_over_couplings") {
  SUBCASE("unconstrained minimum is independence") {
    const DiscretePMF marginal({0.3, 0.7});
    const CouplingSearchResult result =
        min_mi_over_couplings(marginal, 2, [](const JointPMF&) { return true; }, 20);
    CHECK(result.bits <= 1e-12);
  }

  SUBCASE("forcing a copy costs the full entropy") {
    const DiscretePMF marginal({0.3, 0.7});
    const double h = -(0.3 * std::log2(0.3) + 0.7 * std::log2(0.7));
    const auto copy_only = [](const JointPMF& joint) {
      return joint.table(0, 0) + joint.table(1, 1) >= 1.0 - 1e-12;
    };
    const CouplingSearchResult result = min_mi_over_couplings(marginal, 2, copy_only, 20);
    CHECK(result.bits == doctest::Approx(h).epsilon(1e-9));
  }

  SUBCASE("agreement constraint matches a finer-grid oracle") {
    const DiscretePMF marginal({0.5, 0.5});
    const auto agree_90 = [](const JointPMF& joint) {
      return joint.table(0, 0) + joint.table(1, 1) >= 0.9;
    };
    const CouplingSearchResult result = min_mi_over_couplings(marginal, 2, agree_90, 50);

    // Oracle: direct scan over all conditionals on a finer grid, written
    // independently of the implementation.
    double best = std::numeric_limits<double>::infinity();
    const int fine = 400;
    for (int a = 0; a <= fine; ++a) {
      for (int b = 0; b <= fine; ++b) {
        const double p00 = 0.5 * a / fine;
        const double p11 = 0.5 * b / fine;
        if (p00 + p11 < 0.9) continue;
        Matrix table(2, 2);
        table << p00, 0.5 - p00, 0.5 - p11, p11;
        best = std::min(best, mutual_information(JointPMF(table)));
      }
    }
    CHECK(std::abs(result.bits - best) <= 0.01);
  }

  SUBCASE("infeasible predicates raise") {
    const DiscretePMF marginal({0.5, 0.5});
    CHECK_THROWS_AS(
        min_mi_over_couplings(marginal, 2, [](const JointPMF&) { return false; }, 10),
        std::runtime_error);
  }

  SUBCASE("capacity guards") {
    const DiscretePMF wide({0.25, 0.25, 0.25, 0.25});
    CHECK_THROWS_AS(
        min_mi_over_couplings(wide, 4, [](const JointPMF&) { return true; }, 50),
        std::invalid_argument);
    CHECK_THROWS_AS(
        min_mi_over_couplings(wide, 5, [](const JointPMF&) { return true; }, 10),
        std::invalid_argument);
  }
}

TEST_CASE("mi chain identity audit") {
  SUBCASE("copies and independence give zero on both routes") {
    // X uniform binary, X1 = X2 = X.
    std::vector<double> copy_table(8, 0.0);
    copy_table[0] = 0.5;  // (0,0,0)
    copy_table[7] = 0.5;  // (1,1,1)
    const MiChainAudit copies = mi_difference_identity_check(Joint3PMF(2, 2, 2, copy_table));
    CHECK(std::abs(copies.conditional_route) <= 1e-12);
    CHECK(std::abs(copies.marginal_route) <= 1e-12);
    CHECK(copies.defect <= 1e-12);

    // X independent of a correlated (X1, X2) pair.
    std::vector<double> indep(8, 0.0);
    indep[0b000] = 0.5 * 0.4;
    indep[0b011] = 0.5 * 0.6;
    indep[0b100] = 0.5 * 0.4;
    indep[0b111] = 0.5 * 0.6;
    const MiChainAudit ind = mi_difference_identity_check(Joint3PMF(2, 2, 2, indep));
    CHECK(std::abs(ind.conditional_route) <= 1e-12);
    CHECK(std::abs(ind.marginal_route) <= 1e-12);
  }

  SUBCASE("random joints satisfy the chain identity to 1e-12") {
    RandomSource rng(26);
    for (int trial = 0; trial < 50; ++trial) {
      const int nx = 2 + rng.uniform_int(2);
      const int n1 = 2 + rng.uniform_int(2);
      const int n2 = 2 + rng.uniform_int(2);
      std::vector<double> table(static_cast<std::size_t>(nx * n1 * n2));
      double sum = 0.0;
      for (double& v : table) {
        v = 0.01 + rng.uniform01();
        sum += v;
      }
      for (double& v : table) v /= sum;
      const MiChainAudit audit = mi_difference_identity_check(Joint3PMF(nx, n1, n2, table));
      CHECK(audit.defect <= 1e-12);
    }
  }
}

TEST_CASE("graph parsing") {
  const SmallGraph triangle = SmallGraph::parse("0-1,1-2,2-0");
  CHECK(triangle.vertex_count() == 3);
  CHECK(triangle.edge_count() == 3);

  const SmallGraph pinned = SmallGraph::parse("4:0-1");
  CHECK(pinned.vertex_count() == 4);
  CHECK(pinned.edge_count() == 1);

  CHECK_THROWS_AS(SmallGraph::parse("0-0"), std::invalid_argument);
  CHECK_THROWS_AS(SmallGraph::parse("abc"), std::exception);
}
