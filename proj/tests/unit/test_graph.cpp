#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bigg/generators.hpp"
#include "bigg/graph.hpp"
#include "bigg/graph_io.hpp"
#include "bigg/metrics.hpp"
#include "bigg/ordering.hpp"
#include "oracles.hpp"

namespace bigg {
namespace {

using E = std::vector<std::pair<NodeId, NodeId>>;

TEST(Graph, LowerTriangularRows) {
  const E e{{1, 2}, {3, 1}, {2, 3}};
  const auto g = Graph::from_edges(3, e);
  EXPECT_EQ(g.num_edges(), 3u);
  EXPECT_TRUE(g.row(1).empty());
  EXPECT_EQ(std::vector<NodeId>(g.row(2).begin(), g.row(2).end()), (std::vector<NodeId>{1}));
  EXPECT_EQ(std::vector<NodeId>(g.row(3).begin(), g.row(3).end()), (std::vector<NodeId>{1, 2}));
  EXPECT_TRUE(g.has_edge(1, 3));
  EXPECT_TRUE(g.has_edge(3, 1));
  EXPECT_FALSE(Graph::from_edges(3, E{{2, 1}}).has_edge(3, 2));
}

TEST(Graph, RejectsInvalidEdges) {
  EXPECT_THROW(Graph::from_edges(3, E{{1, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph::from_edges(3, E{{4, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph::from_edges(3, E{{0, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph::from_edges(3, E{{2, 1}, {1, 2}}), std::invalid_argument);
}

TEST(Graph, EdgeCountMatchesRowSizes) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto g = testing::random_graph(30, 0.2, s);
    std::size_t total = 0;
    for (NodeId u = 1; u <= g.num_nodes(); ++u) total += g.row(u).size();
    EXPECT_EQ(total, g.num_edges());
    const auto deg = g.degrees();
    EXPECT_EQ(static_cast<std::size_t>(std::accumulate(deg.begin(), deg.end(), 0)), 2 * g.num_edges());
  }
}

TEST(Generators, Grid) {
  const auto g = gen_grid(3, 4);
  EXPECT_EQ(g.num_nodes(), 12);
  EXPECT_EQ(g.num_edges(), 17u);  // 3*3 + 2*4
  for (int d : g.degrees()) {
    EXPECT_GE(d, 2);
    EXPECT_LE(d, 4);
  }
  EXPECT_EQ(gen_grid(10, 10).num_edges(), 180u);
  EXPECT_EQ(gen_grid(1, 5).num_edges(), 4u);
}

TEST(Generators, ErdosRenyi) {
  EXPECT_EQ(gen_erdos_renyi(20, 0.0, 1).num_edges(), 0u);
  EXPECT_EQ(gen_erdos_renyi(20, 1.0, 1).num_edges(), 190u);
  EXPECT_EQ(gen_erdos_renyi(50, 0.3, 9), gen_erdos_renyi(50, 0.3, 9));
  // n=500, p=0.01 over 1000 seeds: mean of C(500,2) p = 1247.5, sd of the mean
  // sqrt(124750 * 0.01 * 0.99 / 1000).
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) sum += static_cast<double>(gen_erdos_renyi(500, 0.01, s).num_edges());
  const double sd = std::sqrt(124750.0 * 0.01 * 0.99 / 1000.0);
  EXPECT_LT(std::abs(sum / 1000.0 - 1247.5), 3.0 * sd);
}

TEST(Generators, Lobster) {
  const auto path = gen_lobster(10, 0.0, 0.0, 100, 3);
  for (int d : path.degrees()) EXPECT_LE(d, 2);
  EXPECT_EQ(path.num_edges() + 1, static_cast<std::size_t>(path.num_nodes()));
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto g = gen_lobster(10, 0.7, 0.7, 100, s);
    EXPECT_LE(g.num_nodes(), 100);
    EXPECT_TRUE(is_lobster(g));
  }
  EXPECT_EQ(gen_lobster(10, 0.7, 0.7, 100, 5), gen_lobster(10, 0.7, 0.7, 100, 5));
}

TEST(NodeCount, Sampler) {
  EXPECT_THROW(fit_node_count(GraphSet{}), std::invalid_argument);
  GraphSet point{{Graph(361), Graph(361)}};
  const auto s = fit_node_count(point);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(s.sample(rng), 361);
  EXPECT_EQ(s.log_prob(361), 0.0);
  EXPECT_EQ(s.log_prob(5), -std::numeric_limits<double>::infinity());
  EXPECT_THROW(NodeCountSampler().log_prob(3), std::logic_error);

  const NodeCountSampler half({{100, 1}, {200, 1}});
  EXPECT_NEAR(half.log_prob(100), std::log(0.5), 1e-15);
  const NodeCountSampler skew({{100, 3}, {200, 1}});
  int hundreds = 0, halves = 0;
  for (int i = 0; i < 10000; ++i) {
    hundreds += skew.sample(rng) == 100;
    halves += half.sample(rng) == 100;
  }
  EXPECT_NEAR(hundreds / 10000.0, 0.75, 0.02);
  EXPECT_NEAR(halves / 10000.0, 0.5, 0.02);
}

TEST(GraphIo, ParsesAndRoundTrips) {
  std::istringstream tri("# triangle\n3 3\n2 1\n3 1\n3 2\n");
  const auto set = read_graphs(tri);
  ASSERT_EQ(set.graphs.size(), 1u);
  EXPECT_EQ(set.graphs[0], Graph::from_rows({{}, {1}, {1, 2}}));
  std::istringstream empty("3 0\n");
  EXPECT_EQ(read_graphs(empty).graphs[0].num_edges(), 0u);

  const std::string text = "3 2\n2 1\n3 2\n---\n4 1\n4 3\n";
  std::istringstream in(text);
  std::ostringstream out;
  write_graphs(out, read_graphs(in));
  EXPECT_EQ(out.str(), text);

  const auto path = std::filesystem::temp_directory_path() / "bigg_io_test.txt";
  GraphSet many;
  for (std::uint64_t s = 0; s < 5; ++s) many.graphs.push_back(testing::random_graph(12, 0.3, s));
  save_graphs(many, path);
  EXPECT_EQ(load_graphs(path).graphs, many.graphs);
  std::filesystem::remove(path);
}

TEST(GraphIo, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_graphs(in);
    } catch (const FormatError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("x y\n"), 1u);
  EXPECT_EQ(line_of("3 1\n4 1\n"), 2u);
  EXPECT_EQ(line_of("3 2\n2 1\n2 1\n"), 3u);
  EXPECT_EQ(line_of("3 1\n2 2\n"), 2u);
  EXPECT_NE(line_of("3 2\n2 1\n"), 0u);
  EXPECT_THROW(load_graphs("/nonexistent/bigg.txt"), std::runtime_error);
}

bool isomorphic_by(const Graph& a, const Graph& b, std::vector<NodeId>& perm) {
  // perm[i] = label in b of node i + 1 of a
  for (const auto& [u, v] : a.edges())
    if (!b.has_edge(perm[static_cast<std::size_t>(u - 1)], perm[static_cast<std::size_t>(v - 1)])) return false;
  return a.num_edges() == b.num_edges();
}

bool isomorphic(const Graph& a, const Graph& b) {
  if (a.num_nodes() != b.num_nodes() || a.num_edges() != b.num_edges()) return false;
  std::vector<NodeId> perm(static_cast<std::size_t>(a.num_nodes()));
  std::iota(perm.begin(), perm.end(), 1);
  do {
    if (isomorphic_by(a, b, perm)) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

TEST(Ordering, ProducesIsomorphicGraphs) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto g = testing::random_graph(7, 0.4, s);
    for (OrderKind k : {OrderKind::DFS, OrderKind::BFS, OrderKind::Default, OrderKind::KCore,
                        OrderKind::DegreeAscending, OrderKind::DegreeDescending}) {
      const auto h = reorder(g, k);
      auto dg = g.degrees(), dh = h.degrees();
      std::sort(dg.begin(), dg.end());
      std::sort(dh.begin(), dh.end());
      EXPECT_EQ(dg, dh);
      EXPECT_TRUE(isomorphic(g, h));
      const auto sg = normalized_laplacian_spectrum(g), sh = normalized_laplacian_spectrum(h);
      for (std::size_t i = 0; i < sg.size(); ++i) EXPECT_NEAR(sg[i], sh[i], 1e-10);
    }
  }
}

TEST(Ordering, BfsOnStarAndPath) {
  // Star centred at 4: BFS starts at the hub, then leaves in label order.
  const auto star = Graph::from_edges(4, E{{4, 1}, {4, 2}, {4, 3}});
  EXPECT_EQ(node_order(star, OrderKind::BFS), (std::vector<NodeId>{4, 1, 2, 3}));
  EXPECT_EQ(node_order(star, OrderKind::Default), (std::vector<NodeId>{1, 2, 3, 4}));
  const auto path = Graph::from_edges(4, E{{2, 1}, {3, 2}, {4, 3}});
  EXPECT_EQ(node_order(path, OrderKind::DFS), (std::vector<NodeId>{2, 1, 3, 4}));
  EXPECT_EQ(parse_order_kind("degree-desc"), OrderKind::DegreeDescending);
  EXPECT_THROW(parse_order_kind("random"), std::invalid_argument);
}

TEST(Ordering, CoreNumbers) {
  // Triangle with a pendant: cores 2,2,2,1.
  const auto g = Graph::from_edges(4, E{{2, 1}, {3, 1}, {3, 2}, {4, 3}});
  EXPECT_EQ(core_numbers(g), (std::vector<int>{2, 2, 2, 1}));
}

}  // namespace
}  // namespace bigg
