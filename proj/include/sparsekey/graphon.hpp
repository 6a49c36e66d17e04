#pragma once

#include "sparsekey/core.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace sparsekey {

/// Simple undirected graph on at most 10 vertices, no self-loops.
class SmallGraph {
 public:
  SmallGraph(int n_vertices, const std::vector<std::pair<int, int>>& edges);

  /// Parses "0-1,1-2,2-0"; vertex count is max index + 1 unless a leading
  /// "k:" prefix pins it (needed for edgeless graphs, e.g. "3:").
  static SmallGraph parse(const std::string& edge_list);

  static SmallGraph complete(int k);

  int vertex_count() const { return n_; }
  bool adjacent(int u, int v) const { return adj_[static_cast<std::size_t>(u) * n_ + v] != 0; }
  int edge_count() const;

  /// Vertex relabeling by a permutation; used by the invariance checks.
  SmallGraph relabel(const std::vector<int>& perm) const;

 private:
  int n_;
  std::vector<std::uint8_t> adj_;
};

/// Distribution of a positive integer order d on {1, ..., probs.size()}.
struct DiscretePMF {
  std::vector<double> probs;

  explicit DiscretePMF(std::vector<double> p);
};

/// Row-stochastic kernel: rows index input symbols, columns output symbols.
struct StochasticKernel {
  Matrix matrix;

  explicit StochasticKernel(Matrix m);
  Eigen::Index input_size() const { return matrix.rows(); }
  Eigen::Index output_size() const { return matrix.cols(); }
};

/// Joint distribution over a pair of finite alphabets.
struct JointPMF {
  Matrix table;

  explicit JointPMF(Matrix t);
};

/// Joint distribution over three finite alphabets (each of size <= 3), used
/// to audit the conditional-MI chain numerically.
struct Joint3PMF {
  int nx, n1, n2;
  std::vector<double> p;

  Joint3PMF(int nx_, int n1_, int n2_, std::vector<double> probs);
  double at(int i, int j, int k) const {
    return p[static_cast<std::size_t>((i * n1 + j) * n2 + k)];
  }
};

/// Homomorphism density t(f, g): the fraction of vertex maps V(f) -> V(g)
/// preserving adjacency. Exhaustive with pruning; requires |V(f)| <= 8.
double hom_density(const SmallGraph& f, const SmallGraph& g);

/// Squared difference of the two densities against the common target g.
double density_distortion(const SmallGraph& g1, const SmallGraph& g2, const SmallGraph& g);

struct DensityGapResult {
  std::size_t best_index = 0;
  double gap = 0.0;
  bool within_nu1 = false;
};

/// Exhaustive scan over candidate pairs; ties keep the first in list order.
DensityGapResult minimize_density_gap(
    const std::vector<std::pair<SmallGraph, SmallGraph>>& candidates, const SmallGraph& g,
    double nu1);

/// d-fold product kernel over output tuples: each tuple column is the product
/// of the per-component transition probabilities. Tuples are indexed
/// lexicographically with the first component most significant.
StochasticKernel binomial_extension(const StochasticKernel& v, int d);

/// Plug-in mutual information in bits, with 0 log 0 = 0.
double mutual_information(const JointPMF& joint);

struct CouplingSearchResult {
  JointPMF coupling;
  double bits;
};

/// Exhaustive grid search over couplings with the given fixed first marginal:
/// each conditional row ranges over all compositions of `grid` into
/// alphabet_y_size parts. Returns the feasible coupling of least mutual
/// information; throws if nothing is feasible. Alphabets <= 4, grid <= 50.
CouplingSearchResult min_mi_over_couplings(const DiscretePMF& marginal_x, int alphabet_y_size,
                                           const std::function<bool(const JointPMF&)>& feasible,
                                           int grid);

/// Audit of the conditional-MI difference chain: the conditional route
/// I(X;X1|X2) - I(X;X2|X1) against the marginal route I(X;X1) - I(X;X2),
/// each evaluated independently by plug-in.
struct MiChainAudit {
  double conditional_route = 0.0;
  double marginal_route = 0.0;
  double defect = 0.0;
};
MiChainAudit mi_difference_identity_check(const Joint3PMF& joint);

}  // namespace sparsekey
