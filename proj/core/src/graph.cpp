#include "bigg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bigg {

Graph::Graph(NodeId n, bool undirected)
    : n_(n), rows_(static_cast<std::size_t>(std::max<NodeId>(n, 0))), undirected_(undirected) {
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
}

Graph Graph::from_edges(NodeId n, std::span<const std::pair<NodeId, NodeId>> edges,
                        bool undirected) {
  Graph g(n, undirected);
  for (auto [u, v] : edges) {
    if (u < 1 || u > n || v < 1 || v > n)
      throw std::invalid_argument("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                  ") out of range");
    if (u == v) throw std::invalid_argument("self loop on node " + std::to_string(u));
    if (undirected && u < v) std::swap(u, v);
    g.rows_[static_cast<std::size_t>(u - 1)].push_back(v);
  }
  for (auto& r : g.rows_) {
    std::sort(r.begin(), r.end());
    if (std::adjacent_find(r.begin(), r.end()) != r.end())
      throw std::invalid_argument("duplicate edge");
  }
  g.validate_and_count();
  return g;
}

Graph Graph::from_rows(std::vector<std::vector<NodeId>> rows, bool undirected) {
  Graph g(static_cast<NodeId>(rows.size()), undirected);
  g.rows_ = std::move(rows);
  g.validate_and_count();
  return g;
}

void Graph::validate_and_count() {
  m_ = 0;
  for (NodeId u = 1; u <= n_; ++u) {
    const auto& r = rows_[static_cast<std::size_t>(u - 1)];
    const NodeId hi = undirected_ ? u - 1 : n_;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] < 1 || r[i] > hi || r[i] == u)
        throw std::invalid_argument("row " + std::to_string(u) + ": neighbor " +
                                    std::to_string(r[i]) + " out of range");
      if (i > 0 && r[i] <= r[i - 1])
        throw std::invalid_argument("row " + std::to_string(u) + " not strictly increasing");
    }
    m_ += r.size();
  }
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(m_);
  for (NodeId u = 1; u <= n_; ++u)
    for (NodeId v : row(u)) out.emplace_back(u, v);
  return out;
}

std::vector<std::vector<NodeId>> Graph::adjacency0() const {
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n_));
  for (NodeId u = 1; u <= n_; ++u) {
    for (NodeId v : row(u)) {
      adj[static_cast<std::size_t>(u - 1)].push_back(v - 1);
      if (undirected_) adj[static_cast<std::size_t>(v - 1)].push_back(u - 1);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(n_), 0);
  for (NodeId u = 1; u <= n_; ++u) {
    for (NodeId v : row(u)) {
      ++deg[static_cast<std::size_t>(u - 1)];
      if (undirected_) ++deg[static_cast<std::size_t>(v - 1)];
    }
  }
  return deg;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u < 1 || v < 1 || u > n_ || v > n_) return false;
  if (undirected_ && u < v) std::swap(u, v);
  auto r = row(u);
  return std::binary_search(r.begin(), r.end(), v);
}

NodeCountSampler::NodeCountSampler(std::map<NodeId, std::size_t> histogram)
    : hist_(std::move(histogram)) {
  for (auto [n, c] : hist_) {
    if (c == 0) continue;
    total_ += c;
    values_.push_back(n);
    cumulative_.push_back(total_);
  }
}

NodeId NodeCountSampler::sample(std::mt19937_64& rng) const {
  if (!fitted()) throw std::logic_error("node-count sampler not fitted");
  std::uniform_int_distribution<std::size_t> pick(0, total_ - 1);
  const std::size_t r = pick(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  return values_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double NodeCountSampler::log_prob(NodeId n) const {
  if (!fitted()) throw std::logic_error("node-count sampler not fitted");
  auto it = hist_.find(n);
  if (it == hist_.end() || it->second == 0) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(it->second) / static_cast<double>(total_));
}

std::map<NodeId, std::size_t> GraphSet::node_count_histogram() const {
  std::map<NodeId, std::size_t> h;
  for (const auto& g : graphs) ++h[g.num_nodes()];
  return h;
}

NodeCountSampler fit_node_count(const GraphSet& train) {
  if (train.graphs.empty()) throw std::invalid_argument("cannot fit node counts on an empty set");
  return NodeCountSampler(train.node_count_histogram());
}

}  // namespace bigg
