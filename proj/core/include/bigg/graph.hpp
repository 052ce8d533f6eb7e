#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace bigg {

using NodeId = std::int32_t;  // 1-based everywhere

/// Undirected graphs keep strictly lower-triangular rows: row u lists the
/// neighbors v < u, sorted. Row 1 is therefore always empty. Directed graphs
/// keep full out-neighbor rows without self loops.
class Graph {
 public:
  Graph() = default;
  explicit Graph(NodeId n, bool undirected = true);

  /// Builds from an edge list; for undirected graphs (u, v) and (v, u) name
  /// the same edge. Throws std::invalid_argument on out-of-range endpoints,
  /// self loops or duplicates.
  static Graph from_edges(NodeId n, std::span<const std::pair<NodeId, NodeId>> edges,
                          bool undirected = true);

  /// Takes rows as given and validates them.
  static Graph from_rows(std::vector<std::vector<NodeId>> rows, bool undirected = true);

  NodeId num_nodes() const { return n_; }
  std::size_t num_edges() const { return m_; }
  bool undirected() const { return undirected_; }

  /// Neighbors stored for node u (1-based).
  std::span<const NodeId> row(NodeId u) const { return rows_[static_cast<std::size_t>(u - 1)]; }
  const std::vector<std::vector<NodeId>>& rows() const { return rows_; }

  /// Edges as (u, v) with v < u, in lexicographic order.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  /// Symmetric adjacency lists, 0-based, sorted. Convenience for metrics and
  /// orderings.
  std::vector<std::vector<NodeId>> adjacency0() const;
  std::vector<int> degrees() const;

  bool has_edge(NodeId u, NodeId v) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void validate_and_count();

  NodeId n_ = 0;
  std::vector<std::vector<NodeId>> rows_;
  bool undirected_ = true;
  std::size_t m_ = 0;
};

/// Empirical distribution over node counts.
class NodeCountSampler {
 public:
  NodeCountSampler() = default;
  explicit NodeCountSampler(std::map<NodeId, std::size_t> histogram);

  bool fitted() const { return total_ > 0; }
  const std::map<NodeId, std::size_t>& histogram() const { return hist_; }

  NodeId sample(std::mt19937_64& rng) const;

  /// log p(n); -infinity when n never occurred. Throws std::logic_error when
  /// nothing was fitted.
  double log_prob(NodeId n) const;

 private:
  std::map<NodeId, std::size_t> hist_;
  std::vector<NodeId> values_;
  std::vector<std::size_t> cumulative_;
  std::size_t total_ = 0;
};

struct GraphSet {
  std::vector<Graph> graphs;

  std::map<NodeId, std::size_t> node_count_histogram() const;
};

/// Throws std::invalid_argument for an empty set.
NodeCountSampler fit_node_count(const GraphSet& train);

}  // namespace bigg
