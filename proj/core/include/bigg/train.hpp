#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bigg/model.hpp"

namespace bigg {

/// How per-graph gradients are computed: one staged tape ("full"), chunked
/// recomputation with k from choose_k ("auto"), or a fixed chunk count.
struct ChunkPolicy {
  enum class Kind { Full, Auto, Fixed } kind = Kind::Full;
  std::size_t k = 1;

  /// "full", "auto" or a positive integer.
  static ChunkPolicy parse(const std::string& text);
  std::string to_string() const;
};

// Config file: one "key = value" per line, '#' starts a comment. Keys:
//   d, L, lr, lr_min, epochs, seed, ordering, decode, k, plateau_window,
//   plateau_factor, plateau_tol, batch_size, grad_clip, threads,
//   force_children, share_lstm
// Unknown keys and malformed values are rejected.
struct TrainConfig {
  int d = 256;
  int bits_length = 256;
  double lr = 1e-3;
  double lr_min = 1e-5;
  int epochs = 100;
  std::uint64_t seed = 1;
  OrderKind ordering = OrderKind::DFS;
  Decode decode;
  ChunkPolicy chunk;
  int plateau_window = 5;
  double plateau_factor = 0.5;
  double plateau_tol = 1e-3;
  int batch_size = 1;
  double grad_clip = 5.0;
  int threads = 0;  // 0: machine parallelism
  ModelOptions options;

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;
  std::string to_text() const;

  /// Throws std::invalid_argument with the offending line number.
  static TrainConfig parse(std::istream& in);
  static TrainConfig load(const std::filesystem::path& path);
};

struct EpochRecord {
  int epoch = 0;     // 1-based
  double loss = 0.0; // mean negative log p(A | n) over the epoch
  double lr = 0.0;   // learning rate used during the epoch
};

/// Halves the learning rate (down to the floor) when the loss fails to
/// improve by a relative tolerance for `window` consecutive evaluations.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, double lr_min, int window, double factor, double tol);

  double lr() const { return lr_; }
  /// Records one loss; returns true when the rate was just reduced.
  bool observe(double loss);

 private:
  double lr_, lr_min_, factor_, tol_;
  int window_;
  std::optional<double> best_;
  int stale_ = 0;
};

/// Mean negative log-likelihood and its gradient over a batch, graphs in
/// parallel, reduced in graph order.
double batch_loss_grad(std::span<const Graph* const> batch, const ParamStore& params, const ModelOptions& opts,
                       const ChunkPolicy& chunk, int threads, std::span<double> grad_out);

using EpochCallback = std::function<void(const EpochRecord&, const BiggModel&)>;

struct TrainResult {
  BiggModel model;
  std::vector<EpochRecord> curve;
};

/// Reorders the training graphs by config.ordering, fits the node-count
/// distribution and runs Adam. When `checkpoint_dir` is given the model bundle
/// there is replaced after every epoch. Throws std::invalid_argument on an
/// empty set or an invalid config.
TrainResult train(const GraphSet& train_set, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt,
                  const EpochCallback& on_epoch = {});

void write_loss_csv(std::span<const EpochRecord> curve, std::ostream& out);

}  // namespace bigg
