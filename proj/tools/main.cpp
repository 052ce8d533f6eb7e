#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bigg/chunked.hpp"
#include "bigg/generators.hpp"
#include "bigg/graph_io.hpp"
#include "bigg/metrics.hpp"
#include "bigg/model.hpp"
#include "bigg/parallel.hpp"
#include "bigg/train.hpp"

namespace fs = std::filesystem;
using namespace bigg;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes through a sibling temp path that is renamed into place only when
// `body` returns normally.
void write_file_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".partial";
  try {
    {
      std::ofstream out(tmp);
      if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      body(out);
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

void replace_dir(const fs::path& staged, const fs::path& dir) {
  if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
  fs::remove_all(dir);
  fs::rename(staged, dir);
}

int env_threads() {
  const char* v = std::getenv("BIGG_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  try {
    const int t = std::stoi(v);
    if (t >= 0) return t;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("BIGG_THREADS must be a non-negative integer, got '") + v + "'");
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw std::runtime_error(std::string(what) + " not found: " + p.string());
}

// ---- gen-data

struct GenDataArgs {
  std::string family;
  int min_side = 10, max_side = 20;
  NodeId er_n = 100;
  double er_p = 0.05;
  int path_len = 10;
  double p1 = 0.7, p2 = 0.7;
  NodeId max_nodes = 100;
  std::size_t count = 100;
  double split = 0.8;
  fs::path out;
  std::uint64_t seed = 1;
};

void gen_data(const GenDataArgs& a) {
  if (a.family == "grid" && (a.min_side < 1 || a.max_side < a.min_side))
    throw UsageError("need 1 <= --min-side <= --max-side");
  std::mt19937_64 rng(a.seed);
  std::uniform_int_distribution<int> side(a.min_side, a.max_side);
  GraphSet all;
  for (std::size_t i = 0; i < a.count; ++i) {
    const std::uint64_t child = rng();
    if (a.family == "grid") {
      const int r = side(rng), c = side(rng);
      all.graphs.push_back(gen_grid(r, c));
    } else if (a.family == "er") {
      all.graphs.push_back(gen_erdos_renyi(a.er_n, a.er_p, child));
    } else {
      all.graphs.push_back(gen_lobster(a.path_len, a.p1, a.p2, a.max_nodes, child));
    }
  }
  const auto n_train = static_cast<std::size_t>(std::llround(a.split * static_cast<double>(a.count)));
  GraphSet train, test;
  for (std::size_t i = 0; i < all.graphs.size(); ++i) (i < n_train ? train : test).graphs.push_back(all.graphs[i]);
  if (test.graphs.empty()) std::cerr << "warning: test split is empty\n";
  if (train.graphs.empty()) std::cerr << "warning: train split is empty\n";

  const fs::path staged = a.out.string() + ".partial";
  fs::remove_all(staged);
  try {
    fs::create_directories(staged);
    save_graphs(train, staged / "train.txt");
    save_graphs(test, staged / "test.txt");
    std::ofstream m(staged / "manifest.txt");
    m << "family = " << a.family << "\n";
    if (a.family == "grid") m << "min_side = " << a.min_side << "\nmax_side = " << a.max_side << "\n";
    if (a.family == "er") m << "n = " << a.er_n << "\np = " << a.er_p << "\n";
    if (a.family == "lobster")
      m << "path_len = " << a.path_len << "\np1 = " << a.p1 << "\np2 = " << a.p2 << "\nmax_nodes = " << a.max_nodes
        << "\n";
    m << "count = " << a.count << "\nsplit = " << a.split << "\nseed = " << a.seed << "\ntrain = "
      << train.graphs.size() << "\ntest = " << test.graphs.size() << "\n";
    m.close();
    if (!m) throw std::runtime_error("cannot write manifest");
    replace_dir(staged, a.out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staged, ec);
    throw;
  }
}

// ---- train

struct TrainArgs {
  fs::path data, config, out;
  int threads = -1;
};

void train_cmd(const TrainArgs& a) {
  const fs::path train_file = fs::is_directory(a.data) ? a.data / "train.txt" : a.data;
  require_file(train_file, "training data");
  TrainConfig cfg;
  if (!a.config.empty()) {
    require_file(a.config, "config");
    cfg = TrainConfig::load(a.config);
  }
  if (a.threads >= 0) cfg.threads = a.threads;
  else if (const int t = env_threads(); t > 0) cfg.threads = t;
  const auto set = load_graphs(train_file);

  const fs::path staged = a.out.string() + ".partial";
  fs::remove_all(staged);
  try {
    auto result = train(set, cfg, staged, [](const EpochRecord& r, const BiggModel&) {
      std::cerr << "epoch " << r.epoch << " loss " << r.loss << " lr " << r.lr << "\n";
    });
    result.model.save(staged);
    {
      std::ofstream csv(staged / "loss.csv");
      write_loss_csv(result.curve, csv);
      std::ofstream tc(staged / "train.cfg");
      tc << cfg.to_text();
      if (!csv || !tc) throw std::runtime_error("cannot write training logs");
    }
    replace_dir(staged, a.out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staged, ec);
    throw;
  }
}

// ---- sample

struct SampleArgs {
  fs::path model, out;
  std::size_t num = 0;
  std::string decode;
  std::uint64_t seed = 1;
  int threads = -1;
};

int pick_threads(int flag) { return resolve_threads(flag >= 0 ? flag : env_threads()); }

void sample_cmd(const SampleArgs& a) {
  const auto model = BiggModel::load(a.model);
  const Decode decode = a.decode.empty() ? model.config().decode : parse_decode(a.decode);
  GraphSet set;
  set.graphs.resize(a.num);
  parallel_for(a.num, pick_threads(a.threads), [&](std::size_t i) {
    std::seed_seq seq{a.seed, static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    set.graphs[i] = model.sample(rng, decode).graph;
  });
  write_file_atomically(a.out, [&](std::ostream& os) { write_graphs(os, set); });
}

// ---- eval

struct EvalArgs {
  fs::path ref, gen, out;
  std::string stats = "degree,clustering,orbit,spectral";
  NodeId spectral_cap = 1000;
  int threads = -1;
};

void eval_cmd(const EvalArgs& a) {
  require_file(a.ref, "reference set");
  require_file(a.gen, "generated set");
  const auto stats = parse_statistics(a.stats);
  const auto ref = load_graphs(a.ref), gen = load_graphs(a.gen);
  ExtractOptions opts;
  opts.spectral_cap = a.spectral_cap;
  const auto rows = evaluate(ref.graphs, gen.graphs, stats, opts, pick_threads(a.threads));
  write_file_atomically(a.out, [&](std::ostream& os) {
    os.precision(17);
    os << "statistic,mmd\n";
    for (const auto& [s, v] : rows) os << to_string(s) << "," << v << "\n";
  });
}

// ---- bench

struct BenchArgs {
  fs::path model, out;
  std::vector<NodeId> sizes{100, 400, 1600};
  std::uint64_t seed = 1;
};

Graph bench_grid(NodeId n) {
  const int r = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
  const int c = std::max(1, static_cast<int>((n + r - 1) / r));
  return gen_grid(r, c);
}

void bench_cmd(const BenchArgs& a) {
  const auto model = BiggModel::load(a.model);
  using clock = std::chrono::steady_clock;
  std::ostringstream rows;
  rows.precision(9);
  rows << "mode,n,m,seconds,cell_ops,peak_live\n";
  for (const NodeId n : a.sizes) {
    if (n < 1) throw UsageError("--sizes entries must be positive");
    std::mt19937_64 rng(a.seed);
    auto t0 = clock::now();
    const auto s = sample_graph(n, model.params(), rng, model.config().decode, model.config().options);
    const double ts = std::chrono::duration<double>(clock::now() - t0).count();
    rows << "sample," << n << "," << s.graph.num_edges() << "," << ts << "," << s.counter.cell_ops() << ","
         << s.forest_entries << "\n";

    const Graph g = reorder(bench_grid(n), model.config().ordering);
    std::vector<double> grad(model.params().size(), 0.0);
    t0 = clock::now();
    const auto r = chunked_backprop(g, model.params(), model.config().options, choose_k(g.num_nodes(), g.num_edges()),
                                    grad, -1.0);
    const double tt = std::chrono::duration<double>(clock::now() - t0).count();
    rows << "train," << g.num_nodes() << "," << g.num_edges() << "," << tt << "," << r.counter.cell_ops() << ","
         << r.peak_live << "\n";
    std::cerr << "n=" << n << " done\n";
  }
  write_file_atomically(a.out, [&](std::ostream& os) { os << rows.str(); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bigg: sparse graph generation with BiGG"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);

  GenDataArgs ga;
  auto* gd = app.add_subcommand("gen-data", "Generate a train/test split of synthetic graphs");
  gd->add_option("--family", ga.family, "grid, er or lobster")->required()->check(CLI::IsMember({"grid", "er", "lobster"}));
  gd->add_option("--min-side", ga.min_side, "grid: smallest side length")->capture_default_str();
  gd->add_option("--max-side", ga.max_side, "grid: largest side length")->capture_default_str();
  gd->add_option("--n", ga.er_n, "er: node count")->capture_default_str()->check(CLI::PositiveNumber);
  gd->add_option("--p", ga.er_p, "er: edge probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gd->add_option("--path-len", ga.path_len, "lobster: expected backbone length")->capture_default_str()->check(CLI::PositiveNumber);
  gd->add_option("--p1", ga.p1, "lobster: first-level probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gd->add_option("--p2", ga.p2, "lobster: second-level probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gd->add_option("--max-nodes", ga.max_nodes, "lobster: node cap")->capture_default_str()->check(CLI::PositiveNumber);
  gd->add_option("--count", ga.count, "number of graphs")->capture_default_str();
  gd->add_option("--split", ga.split, "train fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gd->add_option("--out", ga.out, "output directory")->required();
  gd->add_option("--seed", ga.seed, "random seed")->capture_default_str();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a model on a graph set");
  tr->add_option("--data", ta.data, "gen-data directory or graph-set file")->required();
  tr->add_option("--config", ta.config, "training config (key = value lines)");
  tr->add_option("--out", ta.out, "model directory")->required();
  tr->add_option("--threads", ta.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  SampleArgs sa;
  auto* sm = app.add_subcommand("sample", "Draw graphs from a trained model");
  sm->add_option("--model", sa.model, "model directory")->required();
  sm->add_option("--num", sa.num, "number of graphs")->required();
  sm->add_option("--decode", sa.decode, "sample, greedy or eps:<x>; defaults to the model's setting");
  sm->add_option("--seed", sa.seed, "random seed")->capture_default_str();
  sm->add_option("--out", sa.out, "output graph-set file")->required();
  sm->add_option("--threads", sa.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "MMD between a reference and a generated set");
  ev->add_option("--ref", ea.ref, "reference graph-set file")->required();
  ev->add_option("--gen", ea.gen, "generated graph-set file")->required();
  ev->add_option("--stats", ea.stats, "comma-separated statistics")->capture_default_str();
  ev->add_option("--spectral-cap", ea.spectral_cap, "largest n for the spectral statistic")->capture_default_str();
  ev->add_option("--out", ea.out, "output CSV")->required();
  ev->add_option("--threads", ea.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  BenchArgs ba;
  auto* bn = app.add_subcommand("bench", "Time and count cell ops for sampling and one training update");
  bn->add_option("--model", ba.model, "model directory")->required();
  bn->add_option("--sizes", ba.sizes, "node counts")->delimiter(',')->capture_default_str();
  bn->add_option("--seed", ba.seed, "random seed")->capture_default_str();
  bn->add_option("--out", ba.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gd) gen_data(ga);
    else if (*tr) train_cmd(ta);
    else if (*sm) sample_cmd(sa);
    else if (*ev) eval_cmd(ea);
    else if (*bn) bench_cmd(ba);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
