#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "bigg/graph.hpp"
#include "bigg/params.hpp"

namespace bigg::testing {

/// Every labelled undirected graph on n nodes (2^(n(n-1)/2) of them).
inline std::vector<Graph> all_graphs(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId u = 2; u <= n; ++u)
    for (NodeId v = 1; v < u; ++v) pairs.emplace_back(u, v);
  std::vector<Graph> out;
  const std::uint64_t total = std::uint64_t{1} << pairs.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    std::vector<std::pair<NodeId, NodeId>> e;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if ((mask >> i) & 1U) e.push_back(pairs[i]);
    out.push_back(Graph::from_edges(n, e));
  }
  return out;
}

/// Uniform random graph with each pair present with probability p.
inline Graph random_graph(NodeId n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId u = 2; u <= n; ++u)
    for (NodeId v = 1; v < u; ++v)
      if (coin(rng)) e.emplace_back(u, v);
  return Graph::from_edges(n, e);
}

/// Central finite differences of f with respect to every parameter.
inline std::vector<double> numeric_grad(ParamStore& params, const std::function<double()>& f, double h = 1e-6) {
  auto vals = params.values();
  std::vector<double> g(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double keep = vals[i];
    vals[i] = keep + h;
    const double up = f();
    vals[i] = keep - h;
    const double down = f();
    vals[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max |b|, the infinity-norm relative difference.
inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0.0 ? num / den : num;
}

/// Orbit counts by brute force: every 2-, 3- and 4-subset, its induced
/// subgraph matched against labelled templates under all permutations.
inline std::vector<std::array<std::int64_t, 15>> brute_orbits(const Graph& g) {
  const NodeId n = g.num_nodes();
  std::vector<std::vector<char>> A(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (const auto& [u, v] : g.edges()) {
    A[static_cast<std::size_t>(u - 1)][static_cast<std::size_t>(v - 1)] = 1;
    A[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(u - 1)] = 1;
  }
  struct Template {
    int k;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> orbit;  // per template vertex
  };
  const std::vector<Template> templates = {
      {2, {{0, 1}}, {0, 0}},
      {3, {{0, 1}, {1, 2}}, {1, 2, 1}},
      {3, {{0, 1}, {1, 2}, {0, 2}}, {3, 3, 3}},
      {4, {{0, 1}, {1, 2}, {2, 3}}, {4, 5, 5, 4}},
      {4, {{0, 1}, {0, 2}, {0, 3}}, {7, 6, 6, 6}},
      {4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {8, 8, 8, 8}},
      {4, {{0, 1}, {1, 2}, {2, 0}, {2, 3}}, {10, 10, 11, 9}},
      {4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}, {13, 12, 13, 12}},
      {4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, {14, 14, 14, 14}},
  };
  std::vector<std::array<std::int64_t, 15>> out(static_cast<std::size_t>(n), std::array<std::int64_t, 15>{});
  std::vector<int> sub;
  auto visit = [&](const std::vector<int>& s) {
    const int k = static_cast<int>(s.size());
    for (const auto& t : templates) {
      if (t.k != k) continue;
      std::vector<int> perm(static_cast<std::size_t>(k));
      std::iota(perm.begin(), perm.end(), 0);
      do {
        // template vertex i sits at graph vertex s[perm[i]]
        std::vector<std::vector<char>> T(static_cast<std::size_t>(k), std::vector<char>(static_cast<std::size_t>(k), 0));
        for (auto [a, b] : t.edges) T[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = T[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = 1;
        bool match = true;
        for (int i = 0; i < k && match; ++i)
          for (int j = i + 1; j < k && match; ++j)
            match = T[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
                    A[static_cast<std::size_t>(s[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])])]
                     [static_cast<std::size_t>(s[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])])];
        if (match) {
          for (int i = 0; i < k; ++i)
            ++out[static_cast<std::size_t>(s[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])])]
                 [static_cast<std::size_t>(t.orbit[static_cast<std::size_t>(i)])];
          return;  // one embedding fixes the orbit of every vertex
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  };
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      visit({a, b});
      for (int c = b + 1; c < n; ++c) {
        visit({a, b, c});
        for (int d = c + 1; d < n; ++d) visit({a, b, c, d});
      }
    }
  return out;
}

}  // namespace bigg::testing
