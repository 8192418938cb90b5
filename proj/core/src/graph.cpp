#include "fedgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fedgraph {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)), count_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
    --count_;
  }

  int count() const noexcept { return count_; }

 private:
  std::vector<int> parent_;
  int count_;
};

bool edge_less(const Edge& a, const Edge& b) {
  return a.minus != b.minus ? a.minus < b.minus : a.plus < b.plus;
}

}  // namespace

DeviceGraph::DeviceGraph(int num_nodes, std::vector<Edge> sorted_edges)
    : num_nodes_(num_nodes),
      edges_(std::move(sorted_edges)),
      incidence_(static_cast<std::size_t>(num_nodes)) {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [plus, minus] = edges_[e];
    incidence_[plus].push_back({static_cast<int>(e), minus, true});
    incidence_[minus].push_back({static_cast<int>(e), plus, false});
  }
}

DeviceGraph DeviceGraph::build(int num_nodes,
                               std::span<const std::pair<int, int>> pairs) {
  if (num_nodes < 1) {
    throw GraphError("graph needs at least one node, got " +
                     std::to_string(num_nodes));
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || i >= num_nodes || j < 0 || j >= num_nodes) {
      throw NodeIndexError("edge (" + std::to_string(i + 1) + ", " +
                           std::to_string(j + 1) + ") has a node outside 1.." +
                           std::to_string(num_nodes));
    }
    if (i == j) {
      throw SelfLoopError("self-loop at node " + std::to_string(i + 1));
    }
    edges.push_back({std::max(i, j), std::min(i, j)});
  }
  std::sort(edges.begin(), edges.end(), edge_less);
  const auto dup = std::adjacent_find(edges.begin(), edges.end());
  if (dup != edges.end()) {
    throw DuplicateEdgeError("duplicate edge (" + std::to_string(dup->plus + 1) +
                             ", " + std::to_string(dup->minus + 1) + ")");
  }
  return DeviceGraph(num_nodes, std::move(edges));
}

DeviceGraph DeviceGraph::empty(int num_nodes) {
  return build(num_nodes, std::span<const std::pair<int, int>>{});
}

DeviceGraph DeviceGraph::complete(int num_nodes) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < num_nodes; ++i) {
    for (int j = i + 1; j < num_nodes; ++j) pairs.emplace_back(i, j);
  }
  return build(num_nodes, pairs);
}

DeviceGraph DeviceGraph::from_adjacency(const Eigen::MatrixXi& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw GraphError("adjacency matrix is not square");
  }
  const int n = static_cast<int>(adjacency.rows());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (adjacency(i, j) != 0) pairs.emplace_back(i, j);
    }
  }
  return build(n, pairs);
}

int DeviceGraph::max_degree() const noexcept {
  int d = 0;
  for (const auto& inc : incidence_) d = std::max(d, static_cast<int>(inc.size()));
  return d;
}

int DeviceGraph::edge_index(int u, int v) const {
  if (u == v || u < 0 || v < 0 || u >= num_nodes_ || v >= num_nodes_) return -1;
  const Edge key{std::max(u, v), std::min(u, v)};
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), key, edge_less);
  if (it != edges_.end() && *it == key) {
    return static_cast<int>(it - edges_.begin());
  }
  return -1;
}

bool DeviceGraph::has_edge(int u, int v) const { return edge_index(u, v) >= 0; }

Eigen::MatrixXi DeviceGraph::adjacency() const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(num_nodes_, num_nodes_);
  for (const auto& e : edges_) {
    a(e.plus, e.minus) = 1;
    a(e.minus, e.plus) = 1;
  }
  return a;
}

void Clustering::validate() const {
  if (num_clusters < 1 && !label.empty()) {
    throw ValidationError("clustering must have at least one cluster");
  }
  std::vector<char> seen(static_cast<std::size_t>(std::max(num_clusters, 0)), 0);
  for (int l : label) {
    if (l < 0 || l >= num_clusters) {
      throw ValidationError("cluster label " + std::to_string(l + 1) +
                            " outside 1.." + std::to_string(num_clusters));
    }
    seen[l] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ValidationError("cluster labels are not contiguous");
  }
}

Matrix incidence_matrix(const DeviceGraph& g) {
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(g.num_edges()), g.num_nodes());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto& edge = g.edges()[e];
    d(static_cast<Eigen::Index>(e), edge.plus) = 1.0;
    d(static_cast<Eigen::Index>(e), edge.minus) = -1.0;
  }
  return d;
}

Clustering connected_components(const DeviceGraph& g) {
  DisjointSets sets(g.num_nodes());
  for (const auto& e : g.edges()) sets.unite(e.plus, e.minus);
  Clustering c;
  c.label.assign(static_cast<std::size_t>(g.num_nodes()), -1);
  std::vector<int> root_label(static_cast<std::size_t>(g.num_nodes()), -1);
  for (int u = 0; u < g.num_nodes(); ++u) {
    const int r = sets.find(u);
    if (root_label[r] < 0) root_label[r] = c.num_clusters++;
    c.label[u] = root_label[r];
  }
  return c;
}

int component_count(const DeviceGraph& g) {
  DisjointSets sets(g.num_nodes());
  for (const auto& e : g.edges()) sets.unite(e.plus, e.minus);
  return sets.count();
}

DeviceGraph characteristic_graph(const Clustering& clustering) {
  clustering.validate();
  const int n = clustering.num_nodes();
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (clustering.label[i] == clustering.label[j]) pairs.emplace_back(i, j);
    }
  }
  return DeviceGraph::build(std::max(n, 1), pairs);
}

DeviceGraph corrupt_graph(const DeviceGraph& g0, double level, Rng& rng) {
  if (!(level >= 0.0 && level <= 1.0)) {
    throw ValidationError("corruption level must lie in [0, 1]");
  }
  const int n = g0.num_nodes();
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool flip = rng.bernoulli(level);
      if (g0.has_edge(i, j) != flip) pairs.emplace_back(i, j);
    }
  }
  return DeviceGraph::build(n, pairs);
}

namespace {

void require_same_nodes(const DeviceGraph& a, const DeviceGraph& b) {
  if (a.num_nodes() != b.num_nodes()) {
    throw GraphError("graphs have different node counts (" +
                     std::to_string(a.num_nodes()) + " vs " +
                     std::to_string(b.num_nodes()) + ")");
  }
}

}  // namespace

std::size_t symmetric_difference_size(const DeviceGraph& a,
                                      const DeviceGraph& b) {
  require_same_nodes(a, b);
  std::size_t common = 0;
  for (const auto& e : a.edges()) common += b.has_edge(e.plus, e.minus) ? 1 : 0;
  return a.num_edges() + b.num_edges() - 2 * common;
}

DeviceGraph intersect(const DeviceGraph& a, const DeviceGraph& b) {
  require_same_nodes(a, b);
  std::vector<std::pair<int, int>> pairs;
  for (const auto& e : a.edges()) {
    if (b.has_edge(e.plus, e.minus)) pairs.emplace_back(e.plus, e.minus);
  }
  return DeviceGraph::build(a.num_nodes(), pairs);
}

DeviceGraph induced_subgraph(const DeviceGraph& g, std::span<const int> nodes) {
  std::vector<int> position(static_cast<std::size_t>(g.num_nodes()), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= g.num_nodes()) {
      throw NodeIndexError("induced subgraph node out of range");
    }
    position[nodes[i]] = static_cast<int>(i);
  }
  std::vector<std::pair<int, int>> pairs;
  for (const auto& e : g.edges()) {
    if (position[e.plus] >= 0 && position[e.minus] >= 0) {
      pairs.emplace_back(position[e.plus], position[e.minus]);
    }
  }
  return DeviceGraph::build(static_cast<int>(nodes.size()), pairs);
}

std::size_t false_edge_count(const DeviceGraph& g, const DeviceGraph& g0) {
  require_same_nodes(g, g0);
  std::size_t count = 0;
  for (const auto& e : g.edges()) count += g0.has_edge(e.plus, e.minus) ? 0 : 1;
  return count;
}

double graph_fidelity(const DeviceGraph& g, const DeviceGraph& g0) {
  require_same_nodes(g, g0);
  const double k0 = component_count(g0);
  return k0 / (component_count(g) + static_cast<double>(false_edge_count(g, g0)));
}

double graph_fidelity_lower_limit(int num_nodes, int num_clusters) {
  if (num_clusters < 2) {
    throw ValidationError("fidelity lower limit needs at least two clusters");
  }
  const double n = num_nodes;
  const double k = num_clusters;
  return 2.0 * k / (n * n * (1.0 - 1.0 / k) + 2.0);
}

int optimal_subgraph_value(const DeviceGraph& g, const DeviceGraph& g0) {
  return component_count(intersect(g, g0));
}

int subset_partition_value(const DeviceGraph& g, const DeviceGraph& g0,
                           std::uint64_t mask) {
  require_same_nodes(g, g0);
  DisjointSets sets(g.num_nodes());
  int false_edges = 0;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (((mask >> e) & 1U) == 0) continue;
    const auto& edge = g.edges()[e];
    sets.unite(edge.plus, edge.minus);
    if (!g0.has_edge(edge.plus, edge.minus)) ++false_edges;
  }
  return sets.count() + false_edges;
}

int brute_force_min_partition(const DeviceGraph& g, const DeviceGraph& g0) {
  require_same_nodes(g, g0);
  if (g.num_edges() > kBruteForceEdgeLimit) {
    throw ValidationError("brute-force partition search limited to " +
                          std::to_string(kBruteForceEdgeLimit) + " edges, got " +
                          std::to_string(g.num_edges()));
  }
  const std::uint64_t subsets = std::uint64_t{1} << g.num_edges();
  int best = g.num_nodes() + static_cast<int>(g.num_edges()) + 1;
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    best = std::min(best, subset_partition_value(g, g0, mask));
  }
  return best;
}

double compat_factor_lower_bound(std::size_t t_size, int max_degree) {
  if (t_size == 0) return 1.0;
  if (max_degree < 0) {
    throw ValidationError("maximum degree must be nonnegative");
  }
  const double m = std::min(std::sqrt(static_cast<double>(max_degree)),
                            std::sqrt(static_cast<double>(t_size)));
  return 1.0 / (2.0 * m);
}

double algebraic_connectivity_sq(const DeviceGraph& g) {
  if (g.num_edges() == 0) return 0.0;
  Matrix laplacian = Matrix::Zero(g.num_nodes(), g.num_nodes());
  for (const auto& e : g.edges()) {
    laplacian(e.plus, e.plus) += 1.0;
    laplacian(e.minus, e.minus) += 1.0;
    laplacian(e.plus, e.minus) -= 1.0;
    laplacian(e.minus, e.plus) -= 1.0;
  }
  const Vector ev = symmetric_eigenvalues(laplacian);
  const double cutoff = 1e-10 * std::max(1.0, ev(ev.size() - 1));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff) return ev(i);
  }
  return 0.0;
}

}  // namespace fedgraph
