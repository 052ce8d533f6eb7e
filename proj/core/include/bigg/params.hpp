#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bigg {

/// Flat buffer with a vector-aligned base address.
using AlignedVector = std::vector<double, Eigen::aligned_allocator<double>>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

/// Named weight blocks. Tree cells take [h_left; h_right] and produce the
/// gates (i, f_left, f_right, o, u); LSTM cells take [x; h_prev] and produce
/// (i, f, o, g).
enum class Block : int {
  TreeBotW, TreeBotB,
  TreeTopW, TreeTopB,
  TreeRowW, TreeRowB,
  LstmTopW, LstmTopB,
  SeqW, SeqB,
  HeadLeftW, HeadLeftB,
  HeadRightW, HeadRightB,
  GateW, GateB,
  TokLeft, TokRight,
  BitsW, BitsB,
  Count
};

inline constexpr std::size_t kNumBlocks = static_cast<std::size_t>(Block::Count);

struct BlockInfo {
  std::string_view name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

/// Flat storage for every trainable weight plus a gradient buffer with the
/// same layout. Block views are column-major Eigen maps into the flat array.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(int d, int bits_length);

  int d() const { return d_; }
  int bits_length() const { return bits_length_; }
  std::size_t size() const { return values_.size(); }

  const BlockInfo& info(Block b) const { return blocks_[static_cast<std::size_t>(b)]; }
  const std::array<BlockInfo, kNumBlocks>& blocks() const { return blocks_; }

  MatrixMap mat(Block b) { return view(std::span<double>(values_), b); }
  ConstMatrixMap mat(Block b) const { return view(std::span<const double>(values_), b); }
  MatrixMap grad_mat(Block b) { return view(std::span<double>(grads_), b); }
  ConstMatrixMap grad_mat(Block b) const { return view(std::span<const double>(grads_), b); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> grads() { return grads_; }
  std::span<const double> grads() const { return grads_; }

  void zero_grad();

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for matrices, zero biases.
  void init_uniform(std::uint64_t seed);

  /// Maps a gradient-layout buffer onto the view of block `b`.
  MatrixMap view(std::span<double> flat, Block b) const;
  ConstMatrixMap view(std::span<const double> flat, Block b) const;

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    return a.d_ == b.d_ && a.bits_length_ == b.bits_length_ && a.values_ == b.values_;
  }

 private:
  int d_ = 0;
  int bits_length_ = 0;
  std::array<BlockInfo, kNumBlocks> blocks_{};
  AlignedVector values_;
  AlignedVector grads_;
};

ParamStore init_params(int d, int bits_length, std::uint64_t seed);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(std::size_t size);
  /// One bias-corrected update of `values` from `grads`.
  void step(std::span<double> values, std::span<const double> grads, const AdamHyper& hyper);
  std::int64_t steps() const { return t_; }

 private:
  AlignedVector m_, v_;
  std::int64_t t_ = 0;
};

/// Scales `grads` so its L2 norm is at most max_norm; returns the original norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

// Checkpoint layout (all integers little-endian u32, floats little-endian f64):
//   "BIGGCKPT" | version | d | L | block count
//   per block: name length | name bytes | rows | cols | rows*cols values (column-major)
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path);
/// Throws std::runtime_error on a bad magic/version or when any block shape
/// disagrees with the header dimensions.
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace bigg
