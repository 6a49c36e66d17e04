#include "sparsekey/graphon.hpp"

#include <cmath>
#include <stdexcept>

namespace sparsekey {

namespace {

// Adjacency-preserving maps from f into g with the first `assigned` vertices
// already placed; prunes as soon as one edge breaks.
long long count_homomorphisms(const SmallGraph& f, const SmallGraph& g, std::vector<int>& image,
                              int assigned) {
  if (assigned == f.vertex_count()) return 1;
  long long total = 0;
  for (int target = 0; target < g.vertex_count(); ++target) {
    bool ok = true;
    for (int prev = 0; prev < assigned && ok; ++prev)
      if (f.adjacent(prev, assigned) && !g.adjacent(image[prev], target)) ok = false;
    if (!ok) continue;
    image[assigned] = target;
    total += count_homomorphisms(f, g, image, assigned + 1);
  }
  return total;
}

}  // namespace

SmallGraph::SmallGraph(int n_vertices, const std::vector<std::pair<int, int>>& edges)
    : n_(n_vertices) {
  if (n_ < 1 || n_ > 10) throw std::invalid_argument("SmallGraph: vertex count must lie in [1,10]");
  adj_.assign(static_cast<std::size_t>(n_) * n_, 0);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n_ || v >= n_)
      throw std::invalid_argument("SmallGraph: edge endpoint out of range");
    if (u == v) throw std::invalid_argument("SmallGraph: self-loops are not allowed");
    adj_[static_cast<std::size_t>(u) * n_ + v] = 1;
    adj_[static_cast<std::size_t>(v) * n_ + u] = 1;
  }
}

SmallGraph SmallGraph::parse(const std::string& edge_list) {
  std::string text = edge_list;
  int pinned = -1;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    pinned = std::stoi(text.substr(0, colon));
    text = text.substr(colon + 1);
  }
  std::vector<std::pair<int, int>> edges;
  int max_vertex = -1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const std::string token = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? text.size() : comma + 1;
    if (token.empty()) continue;
    const auto dash = token.find('-');
    if (dash == std::string::npos)
      throw std::invalid_argument("SmallGraph::parse: expected 'u-v' edge token, got '" + token + "'");
    const int u = std::stoi(token.substr(0, dash));
    const int v = std::stoi(token.substr(dash + 1));
    edges.emplace_back(u, v);
    max_vertex = std::max({max_vertex, u, v});
  }
  const int n = pinned >= 0 ? pinned : max_vertex + 1;
  if (n < 1) throw std::invalid_argument("SmallGraph::parse: empty graph needs a 'k:' vertex count");
  return SmallGraph(n, edges);
}

SmallGraph SmallGraph::complete(int k) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < k; ++u)
    for (int v = u + 1; v < k; ++v) edges.emplace_back(u, v);
  return SmallGraph(k, edges);
}

int SmallGraph::edge_count() const {
  int count = 0;
  for (int u = 0; u < n_; ++u)
    for (int v = u + 1; v < n_; ++v)
      if (adjacent(u, v)) ++count;
  return count;
}

SmallGraph SmallGraph::relabel(const std::vector<int>& perm) const {
  if (perm.size() != static_cast<std::size_t>(n_))
    throw std::invalid_argument("SmallGraph::relabel: permutation size mismatch");
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n_; ++u)
    for (int v = u + 1; v < n_; ++v)
      if (adjacent(u, v)) edges.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
  return SmallGraph(n_, edges);
}

DiscretePMF::DiscretePMF(std::vector<double> p) : probs(std::move(p)) {
  if (probs.empty()) throw std::invalid_argument("DiscretePMF: empty support");
  double sum = 0.0;
  for (double v : probs) {
    if (v < 0.0) throw std::invalid_argument("DiscretePMF: negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("DiscretePMF: probabilities must sum to 1");
}

StochasticKernel::StochasticKernel(Matrix m) : matrix(std::move(m)) {
  if (matrix.rows() < 1 || matrix.cols() < 1)
    throw std::invalid_argument("StochasticKernel: empty kernel");
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (matrix(i, j) < 0.0) throw std::invalid_argument("StochasticKernel: negative entry");
      sum += matrix(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("StochasticKernel: row does not sum to 1");
  }
}

JointPMF::JointPMF(Matrix t) : table(std::move(t)) {
  if (table.rows() < 1 || table.cols() < 1) throw std::invalid_argument("JointPMF: empty table");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < table.cols(); ++j)
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      if (table(i, j) < 0.0) throw std::invalid_argument("JointPMF: negative entry");
      sum += table(i, j);
    }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("JointPMF: table must sum to 1");
}

Joint3PMF::Joint3PMF(int nx_, int n1_, int n2_, std::vector<double> probs)
    : nx(nx_), n1(n1_), n2(n2_), p(std::move(probs)) {
  if (nx < 1 || n1 < 1 || n2 < 1 || nx > 3 || n1 > 3 || n2 > 3)
    throw std::invalid_argument("Joint3PMF: alphabet sizes must lie in [1,3]");
  if (p.size() != static_cast<std::size_t>(nx) * n1 * n2)
    throw std::invalid_argument("Joint3PMF: table size mismatch");
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("Joint3PMF: negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("Joint3PMF: table must sum to 1");
}

double hom_density(const SmallGraph& f, const SmallGraph& g) {
  if (f.vertex_count() > 8)
    throw std::invalid_argument("hom_density: pattern graph exceeds the 8-vertex bound");
  std::vector<int> image(static_cast<std::size_t>(f.vertex_count()), 0);
  const long long hits = count_homomorphisms(f, g, image, 0);
  const double total = std::pow(static_cast<double>(g.vertex_count()), f.vertex_count());
  return static_cast<double>(hits) / total;
}

double density_distortion(const SmallGraph& g1, const SmallGraph& g2, const SmallGraph& g) {
  const double diff = hom_density(g1, g) - hom_density(g2, g);
  return diff * diff;
}

DensityGapResult minimize_density_gap(
    const std::vector<std::pair<SmallGraph, SmallGraph>>& candidates, const SmallGraph& g,
    double nu1) {
  if (candidates.empty()) throw std::invalid_argument("minimize_density_gap: empty candidate list");
  DensityGapResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double gap = density_distortion(candidates[i].first, candidates[i].second, g);
    if (gap < best) {
      best = gap;
      result.best_index = i;
    }
  }
  result.gap = best;
  result.within_nu1 = best <= nu1;
  return result;
}

StochasticKernel binomial_extension(const StochasticKernel& v, int d) {
  if (d < 1) throw std::invalid_argument("binomial_extension: order must be positive");
  const Eigen::Index b = v.output_size();
  double columns = 1.0;
  for (int i = 0; i < d; ++i) {
    columns *= static_cast<double>(b);
    if (columns > 1e6) throw std::invalid_argument("binomial_extension: output alphabet exceeds 1e6 columns");
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(columns);
  Matrix out(v.input_size(), cols);
  for (Eigen::Index a = 0; a < v.input_size(); ++a) {
    for (Eigen::Index tuple = 0; tuple < cols; ++tuple) {
      double prob = 1.0;
      Eigen::Index rest = tuple;
      for (int i = d - 1; i >= 0; --i) {
        prob *= v.matrix(a, rest % b);
        rest /= b;
      }
      out(a, tuple) = prob;
    }
  }
  return StochasticKernel(std::move(out));
}

double mutual_information(const JointPMF& joint) {
  const Matrix& p = joint.table;
  std::vector<double> px(static_cast<std::size_t>(p.rows()), 0.0);
  std::vector<double> py(static_cast<std::size_t>(p.cols()), 0.0);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      px[static_cast<std::size_t>(i)] += p(i, j);
      py[static_cast<std::size_t>(j)] += p(i, j);
    }
  double mi = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (v > 0.0) mi += v * std::log2(v / (px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)]));
    }
  return std::max(0.0, mi);
}

CouplingSearchResult min_mi_over_couplings(const DiscretePMF& marginal_x, int alphabet_y_size,
                                           const std::function<bool(const JointPMF&)>& feasible,
                                           int grid) {
  const int nx = static_cast<int>(marginal_x.probs.size());
  if (nx > 4 || alphabet_y_size > 4)
    throw std::invalid_argument("min_mi_over_couplings: alphabet sizes must be <= 4");
  if (alphabet_y_size < 1) throw std::invalid_argument("min_mi_over_couplings: empty output alphabet");
  if (grid < 1 || grid > 50) throw std::invalid_argument("min_mi_over_couplings: grid must lie in [1,50]");

  // All compositions of `grid` into alphabet_y_size parts, lexicographic.
  std::vector<std::vector<double>> rows;
  std::vector<int> parts(static_cast<std::size_t>(alphabet_y_size), 0);
  const std::function<void(int, int)> emit = [&](int index, int remaining) {
    if (index == alphabet_y_size - 1) {
      parts[static_cast<std::size_t>(index)] = remaining;
      std::vector<double> row(parts.size());
      for (std::size_t k = 0; k < parts.size(); ++k) row[k] = static_cast<double>(parts[k]) / grid;
      rows.push_back(std::move(row));
      return;
    }
    for (int take = 0; take <= remaining; ++take) {
      parts[static_cast<std::size_t>(index)] = take;
      emit(index + 1, remaining - take);
    }
  };
  emit(0, grid);

  double combos = 1.0;
  for (int i = 0; i < nx; ++i) {
    combos *= static_cast<double>(rows.size());
    if (combos > 2e7)
      throw std::invalid_argument("min_mi_over_couplings: grid search exceeds the capacity bound");
  }

  std::vector<std::size_t> pick(static_cast<std::size_t>(nx), 0);
  bool found = false;
  double best_bits = std::numeric_limits<double>::infinity();
  Matrix best_table;
  Matrix table(nx, alphabet_y_size);
  while (true) {
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < alphabet_y_size; ++j)
        table(i, j) = marginal_x.probs[static_cast<std::size_t>(i)] * rows[pick[static_cast<std::size_t>(i)]][static_cast<std::size_t>(j)];
    JointPMF joint(table);
    if (feasible(joint)) {
      const double bits = mutual_information(joint);
      if (!found || bits < best_bits - 1e-15) {
        found = true;
        best_bits = bits;
        best_table = joint.table;
      }
    }
    // Odometer over per-row composition indices.
    int carry = nx - 1;
    while (carry >= 0) {
      if (++pick[static_cast<std::size_t>(carry)] < rows.size()) break;
      pick[static_cast<std::size_t>(carry)] = 0;
      --carry;
    }
    if (carry < 0) break;
  }
  if (!found) throw std::runtime_error("min_mi_over_couplings: no feasible coupling on the grid");
  return CouplingSearchResult{JointPMF(std::move(best_table)), best_bits};
}

MiChainAudit mi_difference_identity_check(const Joint3PMF& joint) {
  const int nx = joint.nx, n1 = joint.n1, n2 = joint.n2;

  // Conditional route: average the per-slice plug-in MI over the conditioning
  // variable.
  auto conditional_mi = [&](bool condition_on_x2) {
    const int slices = condition_on_x2 ? n2 : n1;
    const int other = condition_on_x2 ? n1 : n2;
    double total = 0.0;
    for (int s = 0; s < slices; ++s) {
      Matrix table(nx, other);
      double mass = 0.0;
      for (int i = 0; i < nx; ++i)
        for (int o = 0; o < other; ++o) {
          const double v = condition_on_x2 ? joint.at(i, o, s) : joint.at(i, s, o);
          table(i, o) = v;
          mass += v;
        }
      if (mass <= 0.0) continue;
      total += mass * mutual_information(JointPMF(table / mass));
    }
    return total;
  };

  // Marginal route: pairwise tables only; never touches the 3-way entropies.
  auto pairwise_mi = [&](bool with_x1) {
    const int other = with_x1 ? n1 : n2;
    Matrix table = Matrix::Zero(nx, other);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < n1; ++j)
        for (int k = 0; k < n2; ++k) table(i, with_x1 ? j : k) += joint.at(i, j, k);
    return mutual_information(JointPMF(std::move(table)));
  };

  MiChainAudit audit;
  audit.conditional_route = conditional_mi(true) - conditional_mi(false);
  audit.marginal_route = pairwise_mi(true) - pairwise_mi(false);
  audit.defect = std::abs(audit.conditional_route - audit.marginal_route);
  return audit;
}

}  // namespace sparsekey
