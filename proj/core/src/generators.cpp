#include "bigg/generators.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

namespace bigg {

Graph gen_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid dimensions must be positive");
  std::vector<std::pair<NodeId, NodeId>> edges;
  auto id = [cols](int r, int c) { return static_cast<NodeId>(r * cols + c + 1); };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c + 1), id(r, c));
      if (r + 1 < rows) edges.emplace_back(id(r + 1, c), id(r, c));
    }
  }
  return Graph::from_edges(static_cast<NodeId>(rows * cols), edges);
}

Graph gen_erdos_renyi(NodeId n, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("edge probability outside [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<NodeId>> rows(static_cast<std::size_t>(n));
  for (NodeId u = 2; u <= n; ++u)
    for (NodeId v = 1; v < u; ++v)
      if (unif(rng) < p) rows[static_cast<std::size_t>(u - 1)].push_back(v);
  return Graph::from_rows(std::move(rows));
}

Graph gen_lobster(int expected_path_len, double p1, double p2, NodeId max_nodes,
                  std::uint64_t seed) {
  if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0)
    throw std::invalid_argument("lobster probabilities outside [0, 1]");
  if (expected_path_len < 1 || max_nodes < 1)
    throw std::invalid_argument("lobster sizes must be positive");
  const double q1 = std::min(p1, 1.0 - 1e-12);
  const double q2 = std::min(p2, 1.0 - 1e-12);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  NodeId backbone = static_cast<NodeId>(2.0 * unif(rng) * expected_path_len + 0.5);
  backbone = std::clamp<NodeId>(backbone, 1, max_nodes);

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 2; v <= backbone; ++v) edges.emplace_back(v, v - 1);
  NodeId n = backbone;
  for (NodeId b = 1; b <= backbone && n < max_nodes; ++b) {
    while (n < max_nodes && unif(rng) < q1) {
      const NodeId leaf = ++n;
      edges.emplace_back(leaf, b);
      while (n < max_nodes && unif(rng) < q2) edges.emplace_back(++n, leaf);
    }
  }
  return Graph::from_edges(n, edges);
}

}  // namespace bigg
