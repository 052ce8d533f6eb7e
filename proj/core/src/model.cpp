#include "bigg/model.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bigg {

namespace {

void require_undirected(const Graph& g) {
  if (!g.undirected()) throw std::invalid_argument("only undirected graphs are supported");
}

template <class Exec, class RowFn>
std::size_t run_rows(Exec& ex, NodeId n, RowFn&& row_fn) {
  BasicRowForest<typename Exec::Handle> forest;
  for (NodeId u = 1; u <= n; ++u) {
    const auto h_prev = forest.summary(ex, n);
    auto g = row_fn(u, h_prev);
    if (u < n) forest.update(ex, std::move(g));
  }
  std::size_t entries = 0;
  for (const auto& level : forest.levels()) entries += level.size();
  return entries;
}

}  // namespace

GraphLikelihood graph_log_likelihood(const Graph& g, const ParamStore& params, const ModelOptions& opts) {
  require_undirected(g);
  GraphLikelihood out;
  DirectExec ex(params, opts, &out.counter);
  out.row_log_probs.reserve(static_cast<std::size_t>(g.num_nodes()));
  run_rows(ex, g.num_nodes(), [&](NodeId u, const StatePair& h_prev) {
    RowTrace trace;
    auto res = score_row(ex, u, g.row(u), h_prev, opts, &trace);
    out.row_log_probs.push_back(trace.log_prob());
    out.log_prob += out.row_log_probs.back();
    return std::move(res.g);
  });
  return out;
}

double naive_log_likelihood_grad(const Graph& g, const ParamStore& params, const ModelOptions& opts,
                                 std::span<double> grad_out, double scale) {
  require_undirected(g);
  Tape tape(params, opts.share_lstm);
  TapeExec ex(tape);
  run_rows(ex, g.num_nodes(), [&](NodeId u, Slot h_prev) { return score_row(ex, u, g.row(u), h_prev, opts).g; });
  const double ll = tape.log_prob();
  if (!tape.empty()) tape.backward(grad_out, scale);
  return ll;
}

SampleResult sample_graph(NodeId n, const ParamStore& params, std::mt19937_64& rng, Decode decode,
                          const ModelOptions& opts) {
  if (n < 1) throw std::invalid_argument("sample_graph: n must be >= 1");
  SampleResult out;
  DirectExec ex(params, opts, &out.counter);
  std::vector<std::vector<NodeId>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  out.forest_entries = run_rows(ex, n, [&](NodeId u, const StatePair& h_prev) {
    RowTrace trace;
    auto res = generate_row(ex, u, h_prev, rng, decode, opts, &trace);
    out.log_prob += trace.log_prob();
    rows.push_back(std::move(res.neighbors));
    return std::move(res.g);
  });
  out.graph = Graph::from_rows(std::move(rows));
  return out;
}

Decode parse_decode(std::string_view text) {
  if (text == "sample") return Decode::sample();
  if (text == "greedy") return Decode::greedy();
  if (text.starts_with("eps:")) {
    const std::string v(text.substr(4));
    double e = 0.0;
    std::size_t used = 0;
    try {
      e = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == v.size() && used > 0 && e >= 0.0 && e <= 1.0) return Decode::mixed(e);
  }
  throw std::invalid_argument("decode must be sample, greedy or eps:<value in [0,1]>, got '" + std::string(text) + "'");
}

std::string to_string(Decode decode) {
  if (decode.eps >= 1.0) return "sample";
  if (decode.eps <= 0.0) return "greedy";
  std::ostringstream os;
  os.precision(17);
  os << "eps:" << decode.eps;
  return os.str();
}

BiggModel::BiggModel(ModelConfig config, ParamStore params, NodeCountSampler node_counts)
    : config_(config), params_(std::move(params)), node_counts_(std::move(node_counts)) {
  if (params_.d() != config_.d || params_.bits_length() != config_.bits_length)
    throw std::invalid_argument("parameter shapes disagree with model config");
}

double BiggModel::log_prob(const Graph& g) const {
  return node_counts_.log_prob(g.num_nodes()) + graph_log_likelihood(g, params_, config_.options).log_prob;
}

SampleResult BiggModel::sample(std::mt19937_64& rng, Decode decode) const {
  const NodeId n = node_counts_.sample(rng);
  return sample_graph(n, params_, rng, decode, config_.options);
}

void BiggModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_checkpoint(params_, dir / "params.ckpt");
  {
    std::ofstream cfg(dir / "model.cfg");
    cfg << "d=" << config_.d << "\n"
        << "bits_length=" << config_.bits_length << "\n"
        << "force_children=" << (config_.options.force_children ? 1 : 0) << "\n"
        << "share_lstm=" << (config_.options.share_lstm ? 1 : 0) << "\n"
        << "ordering=" << to_string(config_.ordering) << "\n"
        << "decode=" << to_string(config_.decode) << "\n";
    if (!cfg) throw std::runtime_error("cannot write " + (dir / "model.cfg").string());
  }
  std::ofstream nc(dir / "node_counts.txt");
  for (const auto& [n, c] : node_counts_.histogram()) nc << n << " " << c << "\n";
  if (!nc) throw std::runtime_error("cannot write " + (dir / "node_counts.txt").string());
}

namespace {

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::runtime_error("model.cfg: bad integer for " + key + ": '" + v + "'");
  return out;
}

}  // namespace

BiggModel BiggModel::load(const std::filesystem::path& dir) {
  std::ifstream cfg(dir / "model.cfg");
  if (!cfg) throw std::runtime_error("missing " + (dir / "model.cfg").string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(cfg, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("model.cfg: expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("model.cfg: missing key " + k);
    return it->second;
  };
  ModelConfig config;
  config.d = parse_int("d", need("d"));
  config.bits_length = parse_int("bits_length", need("bits_length"));
  config.options.force_children = parse_int("force_children", need("force_children")) != 0;
  config.options.share_lstm = parse_int("share_lstm", need("share_lstm")) != 0;
  try {
    config.ordering = parse_order_kind(need("ordering"));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model.cfg: ") + e.what());
  }

  if (auto it = kv.find("decode"); it != kv.end()) {
    try {
      config.decode = parse_decode(it->second);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("model.cfg: ") + e.what());
    }
  }

  std::ifstream nc(dir / "node_counts.txt");
  if (!nc) throw std::runtime_error("missing " + (dir / "node_counts.txt").string());
  std::map<NodeId, std::size_t> hist;
  long long n = 0, c = 0;
  while (nc >> n >> c) {
    if (n < 1 || c < 0) throw std::runtime_error("node_counts.txt: invalid entry");
    hist[static_cast<NodeId>(n)] += static_cast<std::size_t>(c);
  }
  if (!nc.eof()) throw std::runtime_error("node_counts.txt: malformed");
  if (hist.empty()) throw std::runtime_error("node_counts.txt: empty");

  ParamStore params = load_checkpoint(dir / "params.ckpt");
  if (params.d() != config.d || params.bits_length() != config.bits_length)
    throw std::runtime_error("params.ckpt shape disagrees with model.cfg");
  return BiggModel(config, std::move(params), NodeCountSampler(std::move(hist)));
}

}  // namespace bigg
