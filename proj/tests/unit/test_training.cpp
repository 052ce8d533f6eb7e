#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "bigg/chunked.hpp"
#include "bigg/generators.hpp"
#include "bigg/model.hpp"
#include "bigg/staged.hpp"
#include "bigg/train.hpp"
#include "oracles.hpp"

namespace bigg {
namespace {

using testing::random_graph;
using testing::rel_diff;

std::size_t ceil_log2(NodeId n) { return static_cast<std::size_t>(std::ceil(std::log2(std::max<NodeId>(n, 1)))); }

TEST(StagePlan, BarrierBounds) {
  const std::vector<NodeId> cols;
  const auto path = Graph::from_edges(4, std::vector<std::pair<NodeId, NodeId>>{{2, 1}, {3, 2}, {4, 3}});
  EXPECT_LE(plan_stages(path, 1).at(Stage::BottomUp), 3u);
  for (NodeId n : {2, 5, 17, 64, 200}) {
    for (int L : {1, 4}) {
      const auto g = random_graph(n, 0.1, static_cast<std::uint64_t>(n));
      const auto plan = plan_stages(g, L);
      EXPECT_LE(plan.max_barriers(), ceil_log2(n) + 1) << "n=" << n;
    }
  }
  const auto big = gen_grid(32, 32);
  const auto plan = plan_stages(big, 1);
  std::size_t total = 0;
  for (auto b : plan.barriers) total += b;
  EXPECT_LE(total, 44u);
  const auto empty = plan_stages(Graph(9), 4);
  EXPECT_EQ(empty.at(Stage::BottomUp), 0u);
  EXPECT_EQ(empty.at(Stage::TopDown), 0u);
  EXPECT_GT(empty.at(Stage::Forest), 0u);
  EXPECT_GT(empty.at(Stage::Summary), 0u);
}

TEST(Staged, MatchesNaive) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int L = 1 + static_cast<int>(s % 4);
    const auto params = init_params(4 + 2 * static_cast<int>(s % 3), L, s);
    const NodeId n = 2 + static_cast<NodeId>((s * 7) % 40);
    const auto g = random_graph(n, 0.05 + 0.03 * static_cast<double>(s % 7), s);
    std::vector<double> ga(params.size(), 0.0), gb(params.size(), 0.0);
    const auto st = staged_log_likelihood(g, params, {}, ga);
    const double naive = naive_log_likelihood_grad(g, params, {}, gb);
    EXPECT_NEAR(st.log_prob, naive, 1e-9);
    EXPECT_NEAR(st.log_prob, graph_log_likelihood(g, params).log_prob, 1e-9);
    EXPECT_LT(rel_diff(ga, gb), 1e-8);
  }
  const auto grid = gen_grid(5, 5);
  const auto params = init_params(8, 4, 1);
  EXPECT_NEAR(staged_log_likelihood(grid, params).log_prob, graph_log_likelihood(grid, params).log_prob, 1e-9);
}

TEST(Staged, OptionsAreHonoured) {
  ModelOptions unforced;
  unforced.force_children = false;
  ModelOptions shared;
  shared.share_lstm = true;
  const auto params = init_params(4, 2, 3);
  const auto g = random_graph(15, 0.2, 3);
  for (const auto& opts : {unforced, shared}) {
    std::vector<double> ga(params.size(), 0.0), gb(params.size(), 0.0);
    EXPECT_NEAR(staged_log_likelihood(g, params, opts, ga).log_prob, naive_log_likelihood_grad(g, params, opts, gb),
                1e-9);
    EXPECT_LT(rel_diff(ga, gb), 1e-8);
  }
}

TEST(Staged, EndToEndFiniteDifferences) {
  ParamStore params = init_params(4, 2, 17);
  const auto g = random_graph(10, 0.3, 5);
  std::vector<double> analytic(params.size(), 0.0);
  staged_log_likelihood(g, params, {}, analytic);
  const auto numeric = testing::numeric_grad(params, [&] { return graph_log_likelihood(g, params).log_prob; });
  EXPECT_LT(rel_diff(analytic, numeric), 1e-3);
}

TEST(Chunked, MatchesFullForEveryK) {
  const auto params = init_params(4, 2, 4);
  const auto g = random_graph(64, 0.08, 9);
  std::vector<double> full(params.size(), 0.0);
  const double ll = naive_log_likelihood_grad(g, params, {}, full);
  for (std::size_t k : {1, 2, 4, 8, 13, 64}) {
    std::vector<double> gk(params.size(), 0.0);
    const auto rep = chunked_backprop(g, params, {}, k, gk);
    EXPECT_NEAR(rep.log_prob, ll, 1e-9) << "k=" << k;
    EXPECT_LT(rel_diff(gk, full), 1e-8) << "k=" << k;
  }
  std::vector<double> sink(params.size(), 0.0);
  EXPECT_THROW(chunked_backprop(g, params, {}, 0, sink), std::invalid_argument);
  EXPECT_THROW(chunked_backprop(g, params, {}, 65, sink), std::invalid_argument);
}

TEST(Chunked, SmallAndEmptyGraphs) {
  const auto params = init_params(4, 3, 4);
  for (const Graph& g : {Graph(1), Graph(2), Graph(7), random_graph(3, 1.0, 1)}) {
    std::vector<double> a(params.size(), 0.0), b(params.size(), 0.0);
    const double ll = naive_log_likelihood_grad(g, params, {}, a);
    const auto rep = chunked_backprop(g, params, {}, static_cast<std::size_t>(g.num_nodes()), b);
    EXPECT_NEAR(rep.log_prob, ll, 1e-12);
    EXPECT_LT(rel_diff(b, a), 1e-8);
  }
}

TEST(Chunked, ChosenKUsesLessMemoryThanOneChunk) {
  const auto params = init_params(4, 2, 4);
  const auto g = gen_grid(20, 20);
  const auto k = choose_k(g.num_nodes(), g.num_edges());
  std::vector<double> a(params.size(), 0.0), b(params.size(), 0.0);
  const auto one = chunked_backprop(g, params, {}, 1, a);
  const auto best = chunked_backprop(g, params, {}, k, b);
  EXPECT_LT(best.peak_live, one.peak_live);
  EXPECT_LT(best.peak_live, full_tape_live(g, params));
}

TEST(Chunked, ChooseK) {
  EXPECT_EQ(choose_k(1024, 10240), 32u);
  EXPECT_EQ(choose_k(1024, 10), 1u);
  EXPECT_EQ(choose_k(4, 1000000), 4u);
  EXPECT_EQ(choose_k(1, 0), 1u);
}

TEST(TrainConfig, ParseAndValidate) {
  std::istringstream in(
      "# demo\n d = 16\nL=4\nlr = 0.01\nlr_min=1e-5\nepochs=3\nseed=9\nordering=bfs\ndecode=greedy\nk=auto\n"
      "plateau_window=2\nbatch_size=4\nthreads=2\nshare_lstm=1\n");
  const auto c = TrainConfig::parse(in);
  EXPECT_EQ(c.d, 16);
  EXPECT_EQ(c.bits_length, 4);
  EXPECT_EQ(c.ordering, OrderKind::BFS);
  EXPECT_EQ(c.chunk.kind, ChunkPolicy::Kind::Auto);
  EXPECT_TRUE(c.options.share_lstm);
  std::istringstream round(c.to_text());
  EXPECT_EQ(TrainConfig::parse(round).to_text(), c.to_text());

  for (const char* bad : {"d = 0\n", "lr_min = 1\n", "bogus = 1\n", "k = 0\n", "epochs\n", "d = 4\nd = 8\n",
                          "share_lstm = maybe\n", "lr = fast\n"}) {
    std::istringstream b(bad);
    EXPECT_THROW(TrainConfig::parse(b), std::invalid_argument) << bad;
  }
}

TEST(Plateau, HalvesAfterWindowWithoutImprovement) {
  PlateauSchedule s(1e-3, 1e-5, 2, 0.5, 1e-3);
  EXPECT_FALSE(s.observe(10.0));
  EXPECT_FALSE(s.observe(9.0));
  EXPECT_FALSE(s.observe(8.999));
  EXPECT_TRUE(s.observe(9.5));
  EXPECT_DOUBLE_EQ(s.lr(), 5e-4);
  for (int i = 0; i < 40; ++i) s.observe(9.5);
  EXPECT_DOUBLE_EQ(s.lr(), 1e-5);
}

TEST(Train, SingleGraphLossIsMonotone) {
  TrainConfig c;
  c.d = 8;
  c.bits_length = 2;
  c.lr = 1e-3;
  c.epochs = 15;
  c.threads = 1;
  c.ordering = OrderKind::Default;
  GraphSet set{{random_graph(10, 0.3, 1)}};
  const auto r = train(set, c);
  ASSERT_EQ(r.curve.size(), 15u);
  for (std::size_t i = 1; i < r.curve.size(); ++i) EXPECT_LE(r.curve[i].loss, r.curve[i - 1].loss + 1e-6);
}

TEST(Train, DeterministicAcrossThreadCounts) {
  TrainConfig c;
  c.d = 8;
  c.bits_length = 3;
  c.epochs = 3;
  c.batch_size = 3;
  c.seed = 5;
  GraphSet set;
  for (std::uint64_t s = 0; s < 7; ++s) set.graphs.push_back(random_graph(9 + static_cast<NodeId>(s), 0.3, s));
  c.threads = 1;
  const auto a = train(set, c);
  c.threads = 4;
  const auto b = train(set, c);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].loss, b.curve[i].loss);
  EXPECT_TRUE(a.model.params() == b.model.params());
  c.chunk = ChunkPolicy::parse("auto");
  const auto chunked = train(set, c);
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_NEAR(chunked.curve[i].loss, a.curve[i].loss, 1e-9);
}

TEST(Train, OverfitsPointMass) {
  TrainConfig c;
  c.d = 16;
  c.bits_length = 2;
  c.lr = 2e-2;
  c.lr_min = 1e-5;
  c.epochs = 300;
  c.threads = 1;
  c.ordering = OrderKind::Default;
  const auto g = Graph::from_edges(4, std::vector<std::pair<NodeId, NodeId>>{{2, 1}, {3, 1}, {4, 3}});
  const auto r = train(GraphSet{{g}}, c);
  EXPECT_GT(std::exp(r.model.log_prob(g)), 0.99);
}

TEST(Train, RejectsBadInput) {
  TrainConfig c;
  EXPECT_THROW(train(GraphSet{}, c), std::invalid_argument);
  c.batch_size = 0;
  EXPECT_THROW(train(GraphSet{{Graph(3)}}, c), std::invalid_argument);
}

TEST(Train, WritesCheckpointsAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "bigg_train_ckpt";
  std::filesystem::remove_all(dir);
  TrainConfig c;
  c.d = 4;
  c.bits_length = 2;
  c.epochs = 2;
  int calls = 0;
  const auto r = train(GraphSet{{random_graph(6, 0.4, 2)}}, c, dir, [&](const EpochRecord& rec, const BiggModel&) {
    ++calls;
    EXPECT_EQ(rec.epoch, calls);
    EXPECT_TRUE(std::filesystem::exists(dir / "params.ckpt"));
  });
  EXPECT_EQ(calls, 2);
  EXPECT_TRUE(BiggModel::load(dir).params() == r.model.params());
  std::ostringstream csv;
  write_loss_csv(r.curve, csv);
  EXPECT_EQ(csv.str().substr(0, 14), "epoch,loss,lr\n");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace bigg
