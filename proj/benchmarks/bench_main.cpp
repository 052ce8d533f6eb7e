#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "bigg/cells.hpp"
#include "bigg/chunked.hpp"
#include "bigg/generators.hpp"
#include "bigg/model.hpp"
#include "bigg/ordering.hpp"
#include "bigg/staged.hpp"

namespace {

using namespace bigg;

StatePair random_state(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.5);
  StatePair s = StatePair::zero(d);
  for (int i = 0; i < d; ++i) {
    s.h[i] = nd(rng);
    s.c[i] = nd(rng);
  }
  return s;
}

Graph square_grid(NodeId n) {
  const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
  return reorder(gen_grid(side, side), OrderKind::DFS);
}

void BM_TreeCell(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto params = init_params(d, 8, 1);
  const auto l = random_state(d, 2), r = random_state(d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(tree_cell(l, r, TreeKind::Bot, params));
}
BENCHMARK(BM_TreeCell)->Arg(16)->Arg(64)->Arg(256);

void BM_LstmCell(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto params = init_params(d, 8, 1);
  const auto prev = random_state(d, 2);
  const Vector x = random_state(d, 4).h;
  for (auto _ : state) benchmark::DoNotOptimize(lstm_cell(prev, x, params));
}
BENCHMARK(BM_LstmCell)->Arg(16)->Arg(64)->Arg(256);

void BM_SampleGraph(benchmark::State& state) {
  const auto n = static_cast<NodeId>(state.range(0));
  const auto params = init_params(32, 8, 1);
  std::mt19937_64 rng(7);
  std::int64_t ops = 0;
  for (auto _ : state) {
    const auto r = sample_graph(n, params, rng);
    ops = r.counter.cell_ops();
    benchmark::DoNotOptimize(r.log_prob);
  }
  state.counters["cell_ops"] = static_cast<double>(ops);
}
BENCHMARK(BM_SampleGraph)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

void BM_StagedLikelihoodGrad(benchmark::State& state) {
  const auto g = square_grid(static_cast<NodeId>(state.range(0)));
  const auto params = init_params(32, 8, 1);
  std::vector<double> grad(params.size());
  for (auto _ : state) {
    const auto r = staged_log_likelihood(g, params, {}, grad, -1.0);
    benchmark::DoNotOptimize(r.log_prob);
  }
  state.counters["n"] = g.num_nodes();
}
BENCHMARK(BM_StagedLikelihoodGrad)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

void BM_ChunkedGrad(benchmark::State& state) {
  const auto g = square_grid(static_cast<NodeId>(state.range(0)));
  const auto params = init_params(32, 8, 1);
  std::vector<double> grad(params.size());
  const auto k = choose_k(g.num_nodes(), g.num_edges());
  std::size_t peak = 0;
  for (auto _ : state) {
    const auto r = chunked_backprop(g, params, {}, k, grad, -1.0);
    peak = r.peak_live;
    benchmark::DoNotOptimize(r.log_prob);
  }
  state.counters["k"] = static_cast<double>(k);
  state.counters["peak_live"] = static_cast<double>(peak);
}
BENCHMARK(BM_ChunkedGrad)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
