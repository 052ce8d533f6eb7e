#include "bigg/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bigg/chunked.hpp"
#include "bigg/parallel.hpp"
#include "bigg/staged.hpp"

namespace bigg {

ChunkPolicy ChunkPolicy::parse(const std::string& text) {
  if (text == "full") return {Kind::Full, 1};
  if (text == "auto") return {Kind::Auto, 1};
  std::size_t k = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
  if (ec != std::errc{} || p != text.data() + text.size() || k == 0)
    throw std::invalid_argument("k must be full, auto or a positive integer, got '" + text + "'");
  return {Kind::Fixed, k};
}

std::string ChunkPolicy::to_string() const {
  switch (kind) {
    case Kind::Full: return "full";
    case Kind::Auto: return "auto";
    case Kind::Fixed: return std::to_string(k);
  }
  return "full";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (d < 1) fail("d must be positive");
  if (bits_length < 1) fail("L must be positive");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(lr_min > 0.0) || lr_min > lr) fail("lr_min must lie in (0, lr]");
  if (epochs < 0) fail("epochs must be nonnegative");
  if (plateau_window < 1) fail("plateau_window must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) fail("plateau_factor must lie in (0, 1)");
  if (!(plateau_tol >= 0.0)) fail("plateau_tol must be nonnegative");
  if (batch_size < 1) fail("batch_size must be positive");
  if (!(grad_clip > 0.0)) fail("grad_clip must be positive");
  if (threads < 0) fail("threads must be nonnegative");
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "d = " << d << "\n"
     << "L = " << bits_length << "\n"
     << "lr = " << lr << "\n"
     << "lr_min = " << lr_min << "\n"
     << "epochs = " << epochs << "\n"
     << "seed = " << seed << "\n"
     << "ordering = " << to_string(ordering) << "\n"
     << "decode = " << bigg::to_string(decode) << "\n"
     << "k = " << chunk.to_string() << "\n"
     << "plateau_window = " << plateau_window << "\n"
     << "plateau_factor = " << plateau_factor << "\n"
     << "plateau_tol = " << plateau_tol << "\n"
     << "batch_size = " << batch_size << "\n"
     << "grad_clip = " << grad_clip << "\n"
     << "threads = " << threads << "\n"
     << "force_children = " << (options.force_children ? 1 : 0) << "\n"
     << "share_lstm = " << (options.share_lstm ? 1 : 0) << "\n";
  return os.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("bad value for " + key + ": '" + v + "'");
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw std::invalid_argument("bad value for " + key + ": '" + v + "' (expected 0/1/true/false)");
}

}  // namespace

TrainConfig TrainConfig::parse(std::istream& in) {
  TrainConfig c;
  std::string raw;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (seen.contains(key))
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key " + key);
    seen[key] = line_no;
    try {
      if (key == "d") c.d = parse_number<int>(key, val);
      else if (key == "L") c.bits_length = parse_number<int>(key, val);
      else if (key == "lr") c.lr = parse_number<double>(key, val);
      else if (key == "lr_min") c.lr_min = parse_number<double>(key, val);
      else if (key == "epochs") c.epochs = parse_number<int>(key, val);
      else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, val);
      else if (key == "ordering") c.ordering = parse_order_kind(val);
      else if (key == "decode") c.decode = parse_decode(val);
      else if (key == "k") c.chunk = ChunkPolicy::parse(val);
      else if (key == "plateau_window") c.plateau_window = parse_number<int>(key, val);
      else if (key == "plateau_factor") c.plateau_factor = parse_number<double>(key, val);
      else if (key == "plateau_tol") c.plateau_tol = parse_number<double>(key, val);
      else if (key == "batch_size") c.batch_size = parse_number<int>(key, val);
      else if (key == "grad_clip") c.grad_clip = parse_number<double>(key, val);
      else if (key == "threads") c.threads = parse_number<int>(key, val);
      else if (key == "force_children") c.options.force_children = parse_flag(key, val);
      else if (key == "share_lstm") c.options.share_lstm = parse_flag(key, val);
      else throw std::invalid_argument("unknown key " + key);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  return parse(in);
}

PlateauSchedule::PlateauSchedule(double lr, double lr_min, int window, double factor, double tol)
    : lr_(lr), lr_min_(lr_min), factor_(factor), tol_(tol), window_(window) {}

bool PlateauSchedule::observe(double loss) {
  if (!best_ || loss < *best_ - tol_ * std::abs(*best_)) {
    best_ = loss;
    stale_ = 0;
    return false;
  }
  if (++stale_ < window_) return false;
  stale_ = 0;
  const double next = std::max(lr_ * factor_, lr_min_);
  const bool changed = next < lr_;
  lr_ = next;
  return changed;
}

double batch_loss_grad(std::span<const Graph* const> batch, const ParamStore& params, const ModelOptions& opts,
                       const ChunkPolicy& chunk, int threads, std::span<double> grad_out) {
  if (batch.empty()) return 0.0;
  const double scale = -1.0 / static_cast<double>(batch.size());
  std::vector<AlignedVector> grads(batch.size());
  std::vector<double> ll(batch.size(), 0.0);
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    grads[i].assign(params.size(), 0.0);
    const Graph& g = *batch[i];
    switch (chunk.kind) {
      case ChunkPolicy::Kind::Full:
        ll[i] = staged_log_likelihood(g, params, opts, grads[i], scale).log_prob;
        break;
      case ChunkPolicy::Kind::Auto:
        ll[i] = chunked_backprop(g, params, opts, choose_k(g.num_nodes(), g.num_edges()), grads[i], scale).log_prob;
        break;
      case ChunkPolicy::Kind::Fixed: {
        const auto k = std::min<std::size_t>(chunk.k, static_cast<std::size_t>(std::max<NodeId>(g.num_nodes(), 1)));
        ll[i] = chunked_backprop(g, params, opts, k, grads[i], scale).log_prob;
        break;
      }
    }
  });
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss += ll[i] * scale;
    for (std::size_t j = 0; j < grad_out.size(); ++j) grad_out[j] += grads[i][j];
  }
  return loss;
}

namespace {

void write_bundle_atomically(const BiggModel& model, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  model.save(tmp);
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

}  // namespace

TrainResult train(const GraphSet& train_set, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& checkpoint_dir, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.graphs.empty()) throw std::invalid_argument("train: empty training set");
  for (const auto& g : train_set.graphs)
    if (!g.undirected()) throw std::invalid_argument("train: only undirected graphs are supported");

  std::vector<Graph> graphs;
  graphs.reserve(train_set.graphs.size());
  for (const auto& g : train_set.graphs) graphs.push_back(reorder(g, config.ordering));

  ModelConfig mc{config.d, config.bits_length, config.options, config.ordering, config.decode};
  TrainResult result{BiggModel(mc, init_params(config.d, config.bits_length, config.seed), fit_node_count(train_set)),
                     {}};
  ParamStore& params = result.model.params();
  Adam adam(params.size());
  PlateauSchedule schedule(config.lr, config.lr_min, config.plateau_window, config.plateau_factor,
                           config.plateau_tol);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int threads = resolve_threads(config.threads);
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = schedule.lr();
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += bs) {
      std::vector<const Graph*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + bs); ++i) batch.push_back(&graphs[order[i]]);
      params.zero_grad();
      const double loss = batch_loss_grad(batch, params, config.options, config.chunk, threads, params.grads());
      total += loss * static_cast<double>(batch.size());
      clip_grad_norm(params.grads(), config.grad_clip);
      adam.step(params.values(), params.grads(), AdamHyper{.lr = lr});
    }
    const EpochRecord rec{epoch, total / static_cast<double>(graphs.size()), lr};
    result.curve.push_back(rec);
    schedule.observe(rec.loss);
    if (checkpoint_dir) write_bundle_atomically(result.model, *checkpoint_dir);
    if (on_epoch) on_epoch(rec, result.model);
  }
  return result;
}

void write_loss_csv(std::span<const EpochRecord> curve, std::ostream& out) {
  out << "epoch,loss,lr\n";
  out.precision(17);
  for (const auto& r : curve) out << r.epoch << "," << r.loss << "," << r.lr << "\n";
}

}  // namespace bigg
