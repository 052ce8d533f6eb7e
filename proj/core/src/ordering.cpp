#include "bigg/ordering.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace bigg {

OrderKind parse_order_kind(std::string_view name) {
  if (name == "dfs" || name == "DFS") return OrderKind::DFS;
  if (name == "bfs" || name == "BFS") return OrderKind::BFS;
  if (name == "default") return OrderKind::Default;
  if (name == "kcore") return OrderKind::KCore;
  if (name == "degree-asc") return OrderKind::DegreeAscending;
  if (name == "degree-desc") return OrderKind::DegreeDescending;
  throw std::invalid_argument("unknown ordering '" + std::string(name) + "'");
}

std::string to_string(OrderKind kind) {
  switch (kind) {
    case OrderKind::DFS: return "dfs";
    case OrderKind::BFS: return "bfs";
    case OrderKind::Default: return "default";
    case OrderKind::KCore: return "kcore";
    case OrderKind::DegreeAscending: return "degree-asc";
    case OrderKind::DegreeDescending: return "degree-desc";
  }
  throw std::invalid_argument("unknown ordering");
}

std::vector<int> core_numbers(const Graph& g) {
  // Batagelj-Zaversnik bucket peeling.
  const auto adj = g.adjacency0();
  const std::size_t n = adj.size();
  std::vector<int> deg(n);
  int maxdeg = 0;
  for (std::size_t v = 0; v < n; ++v) {
    deg[v] = static_cast<int>(adj[v].size());
    maxdeg = std::max(maxdeg, deg[v]);
  }
  std::vector<std::size_t> bin(static_cast<std::size_t>(maxdeg) + 1, 0);
  for (int d : deg) ++bin[static_cast<std::size_t>(d)];
  std::size_t start = 0;
  for (auto& b : bin) {
    const std::size_t c = b;
    b = start;
    start += c;
  }
  std::vector<std::size_t> pos(n), vert(n);
  for (std::size_t v = 0; v < n; ++v) {
    pos[v] = bin[static_cast<std::size_t>(deg[v])]++;
    vert[pos[v]] = v;
  }
  for (std::size_t d = bin.size() - 1; d > 0; --d) bin[d] = bin[d - 1];
  if (!bin.empty()) bin[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t v = vert[i];
    for (NodeId w0 : adj[v]) {
      const auto w = static_cast<std::size_t>(w0);
      if (deg[w] > deg[v]) {
        const auto dw = static_cast<std::size_t>(deg[w]);
        const std::size_t pw = pos[w], ps = bin[dw];
        const std::size_t u = vert[ps];
        if (u != w) {
          pos[w] = ps;
          vert[pw] = u;
          pos[u] = pw;
          vert[ps] = w;
        }
        ++bin[dw];
        --deg[w];
      }
    }
  }
  return deg;
}

namespace {

// Unvisited node of maximum degree, smallest label on ties; n if none left.
std::size_t next_root(const std::vector<int>& deg, const std::vector<bool>& seen) {
  std::size_t best = deg.size();
  for (std::size_t v = 0; v < deg.size(); ++v)
    if (!seen[v] && (best == deg.size() || deg[v] > deg[best])) best = v;
  return best;
}

std::vector<NodeId> traversal(const Graph& g, bool depth_first) {
  const auto adj = g.adjacency0();
  const auto deg = g.degrees();
  const std::size_t n = adj.size();
  std::vector<bool> seen(n, false);
  std::vector<NodeId> order;
  order.reserve(n);
  for (std::size_t root = next_root(deg, seen); root < n; root = next_root(deg, seen)) {
    if (depth_first) {
      // Explicit stack of (node, next neighbour index) reproduces recursive preorder.
      std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
      seen[root] = true;
      order.push_back(static_cast<NodeId>(root + 1));
      while (!stack.empty()) {
        auto& [v, i] = stack.back();
        if (i == adj[v].size()) {
          stack.pop_back();
          continue;
        }
        const auto w = static_cast<std::size_t>(adj[v][i++]);
        if (seen[w]) continue;
        seen[w] = true;
        order.push_back(static_cast<NodeId>(w + 1));
        stack.emplace_back(w, 0);
      }
    } else {
      std::deque<std::size_t> queue{root};
      seen[root] = true;
      while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        order.push_back(static_cast<NodeId>(v + 1));
        for (NodeId w0 : adj[v]) {
          const auto w = static_cast<std::size_t>(w0);
          if (!seen[w]) {
            seen[w] = true;
            queue.push_back(w);
          }
        }
      }
    }
  }
  return order;
}

std::vector<NodeId> sorted_by_key(std::size_t n, const std::vector<int>& key, bool descending) {
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{1});
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    const int ka = key[static_cast<std::size_t>(a - 1)], kb = key[static_cast<std::size_t>(b - 1)];
    return descending ? ka > kb : ka < kb;
  });
  return order;
}

}  // namespace

std::vector<NodeId> node_order(const Graph& g, OrderKind kind) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  switch (kind) {
    case OrderKind::DFS: return traversal(g, true);
    case OrderKind::BFS: return traversal(g, false);
    case OrderKind::Default: {
      std::vector<NodeId> order(n);
      std::iota(order.begin(), order.end(), NodeId{1});
      return order;
    }
    case OrderKind::KCore: return sorted_by_key(n, core_numbers(g), false);
    case OrderKind::DegreeAscending: return sorted_by_key(n, g.degrees(), false);
    case OrderKind::DegreeDescending: return sorted_by_key(n, g.degrees(), true);
  }
  throw std::invalid_argument("unknown ordering");
}

Graph relabel(const Graph& g, const std::vector<NodeId>& order) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  if (order.size() != n) throw std::invalid_argument("order size mismatch");
  std::vector<NodeId> new_label(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId old = order[i];
    if (old < 1 || static_cast<std::size_t>(old) > n || new_label[static_cast<std::size_t>(old - 1)] != 0)
      throw std::invalid_argument("order is not a permutation");
    new_label[static_cast<std::size_t>(old - 1)] = static_cast<NodeId>(i + 1);
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(g.num_edges());
  for (auto [u, v] : g.edges())
    edges.emplace_back(new_label[static_cast<std::size_t>(u - 1)], new_label[static_cast<std::size_t>(v - 1)]);
  return Graph::from_edges(g.num_nodes(), edges, g.undirected());
}

Graph reorder(const Graph& g, OrderKind kind) { return relabel(g, node_order(g, kind)); }

}  // namespace bigg
