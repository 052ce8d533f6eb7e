#include "bigg/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>

#include "bigg/generators.hpp"
#include "bigg/parallel.hpp"

namespace bigg {

Statistic parse_statistic(std::string_view name) {
  if (name == "degree") return Statistic::Degree;
  if (name == "clustering") return Statistic::Clustering;
  if (name == "orbit") return Statistic::Orbit;
  if (name == "spectral") return Statistic::Spectral;
  throw std::invalid_argument("unknown statistic '" + std::string(name) +
                              "' (expected degree, clustering, orbit or spectral)");
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::Degree: return "degree";
    case Statistic::Clustering: return "clustering";
    case Statistic::Orbit: return "orbit";
    case Statistic::Spectral: return "spectral";
  }
  return "degree";
}

std::vector<Statistic> parse_statistics(std::string_view list) {
  std::vector<Statistic> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const auto item = list.substr(0, comma);
    if (!item.empty()) out.push_back(parse_statistic(item));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw std::invalid_argument("empty statistic list");
  return out;
}

SpectralCapExceeded::SpectralCapExceeded(NodeId n, NodeId cap)
    : std::runtime_error("spectrum of a " + std::to_string(n) + "-node graph exceeds the cap of " +
                         std::to_string(cap) + " nodes") {}

std::vector<double> degree_histogram(const Graph& g) {
  const auto deg = g.degrees();
  if (deg.empty()) return {};
  std::vector<double> h(static_cast<std::size_t>(*std::max_element(deg.begin(), deg.end())) + 1, 0.0);
  for (int k : deg) h[static_cast<std::size_t>(k)] += 1.0;
  for (double& x : h) x /= static_cast<double>(deg.size());
  return h;
}

std::vector<double> clustering_coefficients(const Graph& g) {
  const auto adj = g.adjacency0();
  std::vector<double> cc(adj.size(), 0.0);
  for (std::size_t v = 0; v < adj.size(); ++v) {
    const auto& nb = adj[v];
    const std::size_t k = nb.size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& ri = adj[static_cast<std::size_t>(nb[i])];
      for (std::size_t j = i + 1; j < k; ++j) links += std::binary_search(ri.begin(), ri.end(), nb[j]) ? 1 : 0;
    }
    cc[v] = 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  return cc;
}

namespace {

std::vector<double> histogram(std::span<const double> xs, double lo, double hi, int bins) {
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  if (xs.empty()) return h;
  for (double x : xs) {
    auto b = static_cast<long>(std::floor((x - lo) / (hi - lo) * bins));
    b = std::clamp<long>(b, 0, bins - 1);
    h[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(xs.size());
  return h;
}

}  // namespace

std::vector<double> clustering_histogram(const Graph& g) {
  return histogram(clustering_coefficients(g), 0.0, 1.0, kClusteringBins);
}

std::vector<double> normalized_laplacian_spectrum(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  if (n == 0) return {};
  const auto deg = g.degrees();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (deg[static_cast<std::size_t>(i)] > 0) lap(i, i) = 1.0;
  for (const auto& [u, v] : g.edges()) {
    const double w = -1.0 / std::sqrt(static_cast<double>(deg[static_cast<std::size_t>(u - 1)]) *
                                      static_cast<double>(deg[static_cast<std::size_t>(v - 1)]));
    lap(u - 1, v - 1) = w;
    lap(v - 1, u - 1) = w;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

std::vector<double> spectral_histogram(const Graph& g, NodeId cap) {
  if (g.num_nodes() > cap) throw SpectralCapExceeded(g.num_nodes(), cap);
  return histogram(normalized_laplacian_spectrum(g), 0.0, 2.0, kSpectralBins);
}

std::vector<double> extract(Statistic s, const Graph& g, const ExtractOptions& opts) {
  switch (s) {
    case Statistic::Degree: return degree_histogram(g);
    case Statistic::Clustering: return clustering_histogram(g);
    case Statistic::Orbit: return mean_orbit_counts(g);
    case Statistic::Spectral: return spectral_histogram(g, opts.spectral_cap);
  }
  return {};
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  const double na = sa > 0.0 ? sa : 1.0, nb = sb > 0.0 ? sb : 1.0;
  double l1 = 0.0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
    const double x = i < a.size() ? a[i] / na : 0.0;
    const double y = i < b.size() ? b[i] / nb : 0.0;
    l1 += std::abs(x - y);
  }
  return 0.5 * l1;
}

double gaussian_tv_kernel(std::span<const double> a, std::span<const double> b, double sigma) {
  const double tv = total_variation(a, b);
  return std::exp(-tv * tv / (2.0 * sigma * sigma));
}

double mmd(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b, double sigma) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mmd: empty sample set");
  auto mean_k = [&](std::span<const std::vector<double>> x, std::span<const std::vector<double>> y) {
    double s = 0.0;
    for (const auto& p : x)
      for (const auto& q : y) s += gaussian_tv_kernel(p, q, sigma);
    return s / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  };
  return std::max(0.0, mean_k(a, a) + mean_k(b, b) - 2.0 * mean_k(a, b));
}

std::vector<std::pair<Statistic, double>> evaluate(std::span<const Graph> ref, std::span<const Graph> gen,
                                                   std::span<const Statistic> stats, const ExtractOptions& opts,
                                                   int threads) {
  if (ref.empty() || gen.empty()) throw std::invalid_argument("evaluate: empty graph set");
  std::vector<std::pair<Statistic, double>> out;
  for (Statistic s : stats) {
    std::vector<std::vector<double>> fr(ref.size()), fg(gen.size());
    parallel_for(ref.size() + gen.size(), threads, [&](std::size_t i) {
      if (i < ref.size()) fr[i] = extract(s, ref[i], opts);
      else fg[i - ref.size()] = extract(s, gen[i - ref.size()], opts);
    });
    out.emplace_back(s, mmd(fr, fg));
  }
  return out;
}

bool is_lobster(const Graph& g) {
  const NodeId n = g.num_nodes();
  if (n == 0) return false;
  if (g.num_edges() != static_cast<std::size_t>(n - 1)) return false;
  const auto adj = g.adjacency0();
  // Connected with n - 1 edges means a tree.
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<NodeId> q;
  q.push(0);
  seen[0] = 1;
  NodeId reached = 1;
  while (!q.empty()) {
    const NodeId v = q.front();
    q.pop();
    for (NodeId w : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        q.push(w);
      }
  }
  if (reached != n) return false;
  std::vector<int> deg(static_cast<std::size_t>(n));
  std::vector<char> alive(static_cast<std::size_t>(n), 1);
  for (std::size_t v = 0; v < adj.size(); ++v) deg[v] = static_cast<int>(adj[v].size());
  for (int round = 0; round < 2; ++round) {
    std::vector<NodeId> leaves;
    for (NodeId v = 0; v < n; ++v)
      if (alive[static_cast<std::size_t>(v)] && deg[static_cast<std::size_t>(v)] <= 1) leaves.push_back(v);
    for (NodeId v : leaves) {
      alive[static_cast<std::size_t>(v)] = 0;
      for (NodeId w : adj[static_cast<std::size_t>(v)])
        if (alive[static_cast<std::size_t>(w)]) --deg[static_cast<std::size_t>(w)];
    }
  }
  // What remains is a subtree; it is a path iff no degree exceeds 2.
  for (NodeId v = 0; v < n; ++v)
    if (alive[static_cast<std::size_t>(v)] && deg[static_cast<std::size_t>(v)] > 2) return false;
  return true;
}

double lobster_error_rate(std::span<const Graph> graphs) {
  if (graphs.empty()) throw std::invalid_argument("lobster_error_rate: empty set");
  std::size_t bad = 0;
  for (const auto& g : graphs) bad += is_lobster(g) ? 0 : 1;
  return static_cast<double>(bad) / static_cast<double>(graphs.size());
}

std::vector<Graph> erdos_renyi_baseline(const GraphSet& train, std::size_t count, std::uint64_t seed) {
  const NodeCountSampler sampler = fit_node_count(train);
  double edges = 0.0, pairs = 0.0;
  for (const auto& g : train.graphs) {
    edges += static_cast<double>(g.num_edges());
    const double n = g.num_nodes();
    pairs += n * (n - 1) / 2.0;
  }
  const double p = pairs > 0.0 ? edges / pairs : 0.0;
  std::mt19937_64 rng(seed);
  std::vector<Graph> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const NodeId n = sampler.sample(rng);
    out.push_back(gen_erdos_renyi(n, p, rng()));
  }
  return out;
}

}  // namespace bigg
