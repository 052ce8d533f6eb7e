#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bigg/edge_tree.hpp"
#include "bigg/graph.hpp"
#include "bigg/ordering.hpp"
#include "bigg/params.hpp"
#include "bigg/row_forest.hpp"

namespace bigg {

struct GraphLikelihood {
  double log_prob = 0.0;              // log p(A | n), node count excluded
  std::vector<double> row_log_probs;  // index u - 1
  OpCounter counter;
};

/// Direct evaluation of log p(A | n) with the row forest.
/// Throws std::invalid_argument for directed graphs.
GraphLikelihood graph_log_likelihood(const Graph& g, const ParamStore& params, const ModelOptions& opts = {});

/// Sequential reference gradient: records every cell of every row on one
/// tape and accumulates scale * d log p(A | n) / d theta into `grad_out`.
/// Returns log p(A | n).
double naive_log_likelihood_grad(const Graph& g, const ParamStore& params, const ModelOptions& opts,
                                 std::span<double> grad_out, double scale = 1.0);

struct SampleResult {
  Graph graph;
  double log_prob = 0.0;  // log probability of the decisions taken, node count excluded
  OpCounter counter;
  std::size_t forest_entries = 0;  // row states retained by the forest at the end
};

SampleResult sample_graph(NodeId n, const ParamStore& params, std::mt19937_64& rng,
                          Decode decode = Decode::sample(), const ModelOptions& opts = {});

/// "sample", "greedy" or "eps:<value>" with the value in [0, 1].
/// Throws std::invalid_argument otherwise.
Decode parse_decode(std::string_view text);
std::string to_string(Decode decode);

struct ModelConfig {
  int d = 256;
  int bits_length = 256;
  ModelOptions options;
  OrderKind ordering = OrderKind::DFS;
  Decode decode;  // default for sampling
};

/// Trained parameters with the empirical node-count distribution.
class BiggModel {
 public:
  BiggModel() = default;
  BiggModel(ModelConfig config, ParamStore params, NodeCountSampler node_counts);

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }
  const NodeCountSampler& node_counts() const { return node_counts_; }

  /// log p(n) + log p(A | n), for a graph already in model order.
  double log_prob(const Graph& g) const;
  SampleResult sample(std::mt19937_64& rng) const { return sample(rng, config_.decode); }
  SampleResult sample(std::mt19937_64& rng, Decode decode) const;

  // Bundle directory: params.ckpt, model.cfg (key=value) and node_counts.txt.
  void save(const std::filesystem::path& dir) const;
  /// Throws std::runtime_error on a missing or malformed bundle.
  static BiggModel load(const std::filesystem::path& dir);

 private:
  ModelConfig config_;
  ParamStore params_;
  NodeCountSampler node_counts_;
};

}  // namespace bigg
