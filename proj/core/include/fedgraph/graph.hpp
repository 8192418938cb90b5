#pragma once

#include "fedgraph/errors.hpp"
#include "fedgraph/linalg.hpp"
#include "fedgraph/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fedgraph {

// Node indices are 0-based everywhere inside the library. File readers and
// writers convert to and from the 1-based external convention.

/// Oriented edge: `plus` is the larger endpoint, `minus` the smaller.
struct Edge {
  int plus = 0;
  int minus = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class GraphError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};
class NodeIndexError : public GraphError {
 public:
  using GraphError::GraphError;
};
class DuplicateEdgeError : public GraphError {
 public:
  using GraphError::GraphError;
};
class SelfLoopError : public GraphError {
 public:
  using GraphError::GraphError;
};

/// Incident edge seen from one endpoint.
struct Incidence {
  int edge = 0;       ///< index into DeviceGraph::edges()
  int neighbor = 0;   ///< the other endpoint
  bool is_plus = false;  ///< true if this node is the edge's `plus` end
};

/// Undirected simple graph over devices with a canonical edge order.
///
/// Edges are stored as (plus, minus) with plus > minus and sorted
/// lexicographically by (minus, plus); incidence-matrix rows follow that order.
class DeviceGraph {
 public:
  DeviceGraph() = default;

  /// Builds a graph from unordered pairs. Throws NodeIndexError,
  /// SelfLoopError or DuplicateEdgeError on invalid input.
  static DeviceGraph build(int num_nodes,
                           std::span<const std::pair<int, int>> pairs);
  static DeviceGraph build(int num_nodes,
                           std::initializer_list<std::pair<int, int>> pairs) {
    return build(num_nodes, std::span<const std::pair<int, int>>(
                                pairs.begin(), pairs.size()));
  }
  static DeviceGraph empty(int num_nodes);
  static DeviceGraph complete(int num_nodes);
  /// Graph with an edge (i, j) wherever adjacency(i, j) != 0 for i < j.
  static DeviceGraph from_adjacency(const Eigen::MatrixXi& adjacency);

  int num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<Incidence>& incident(int node) const {
    return incidence_.at(static_cast<std::size_t>(node));
  }
  int degree(int node) const {
    return static_cast<int>(incident(node).size());
  }
  int max_degree() const noexcept;
  bool has_edge(int u, int v) const;
  /// Index of edge {u, v} in edges(), or -1.
  int edge_index(int u, int v) const;

  Eigen::MatrixXi adjacency() const;

  friend bool operator==(const DeviceGraph& a, const DeviceGraph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  DeviceGraph(int num_nodes, std::vector<Edge> sorted_edges);

  int num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> incidence_;
};

/// Assignment of nodes to clusters labelled 0..num_clusters-1.
struct Clustering {
  std::vector<int> label;
  int num_clusters = 0;

  int num_nodes() const noexcept { return static_cast<int>(label.size()); }
  /// Throws ValidationError unless labels are contiguous 0..K-1.
  void validate() const;
};

/// Signed |E| x |V| incidence matrix: +1 at `plus`, -1 at `minus`.
Matrix incidence_matrix(const DeviceGraph& g);

/// Connected components, labelled in order of their smallest node.
Clustering connected_components(const DeviceGraph& g);
int component_count(const DeviceGraph& g);

/// Union of disjoint cliques, one per cluster.
DeviceGraph characteristic_graph(const Clustering& clustering);

/// Flips the status of every unordered pair independently with probability
/// `level`. Pairs are visited in (i < j) row-major order with one Bernoulli
/// draw each. Returns the corrupted graph.
DeviceGraph corrupt_graph(const DeviceGraph& g0, double level, Rng& rng);

/// Number of pairs on which two graphs over the same node set disagree.
std::size_t symmetric_difference_size(const DeviceGraph& a,
                                      const DeviceGraph& b);

DeviceGraph intersect(const DeviceGraph& a, const DeviceGraph& b);

/// Subgraph induced by `nodes` (renumbered 0..nodes.size()-1 in that order).
DeviceGraph induced_subgraph(const DeviceGraph& g, std::span<const int> nodes);

/// |E \ E0|.
std::size_t false_edge_count(const DeviceGraph& g, const DeviceGraph& g0);

/// K(E0) / (K(E) + |E \ E0|).
double graph_fidelity(const DeviceGraph& g, const DeviceGraph& g0);

/// Smallest fidelity attainable for a characteristic graph with K clusters
/// over n nodes: 2K / (n^2 (1 - 1/K) + 2). Requires K >= 2.
double graph_fidelity_lower_limit(int num_nodes, int num_clusters);

/// K(E ∩ E0), the minimum of K(E~) + |E~ \ E0| over subgraphs E~ of E.
int optimal_subgraph_value(const DeviceGraph& g, const DeviceGraph& g0);

/// Exhaustive minimum of K(E~) + |E~ \ E0| over all 2^|E| subsets of E.
/// Exponential; guarded to |E| <= kBruteForceEdgeLimit.
inline constexpr std::size_t kBruteForceEdgeLimit = 20;
int brute_force_min_partition(const DeviceGraph& g, const DeviceGraph& g0);

/// K(E~) + |E~ \ E0| for the subset of g's edges selected by `mask` bits.
int subset_partition_value(const DeviceGraph& g, const DeviceGraph& g0,
                           std::uint64_t mask);

/// Degree lower bound on the compatibility factor:
/// 1 if t_size == 0, else 1 / (2 min(sqrt(d), sqrt(t_size))).
double compat_factor_lower_bound(std::size_t t_size, int max_degree);

/// Smallest nonzero eigenvalue of the Laplacian D^T D (0 if the graph has
/// no edges). Eigenvalues below 1e-10 * max(1, lambda_max) count as zero.
double algebraic_connectivity_sq(const DeviceGraph& g);

// --- text formats (1-based on disk) ---

/// First non-comment line holds |V|; each following line `i j`. Lines are
/// trimmed and `#` starts a comment.
DeviceGraph read_graph_text(std::istream& in);
DeviceGraph read_graph_file(const std::string& path);
void write_graph_text(std::ostream& out, const DeviceGraph& g);
void write_graph_file(const std::string& path, const DeviceGraph& g);

/// Square 0/1 CSV adjacency matrix; must be symmetric with a zero diagonal.
DeviceGraph read_adjacency_csv(std::istream& in);

}  // namespace fedgraph
