#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bigg/cells.hpp"

namespace bigg {

/// Instrumented counts of cell applications (one per batch item).
struct OpCounter {
  std::int64_t tree_cells = 0;
  std::int64_t lstm_cells = 0;
  std::int64_t bits_embeds = 0;
  std::int64_t heads = 0;

  std::int64_t cell_ops() const { return tree_cells + lstm_cells + bits_embeds; }
  OpCounter& operator+=(const OpCounter& o) {
    tree_cells += o.tree_cells;
    lstm_cells += o.lstm_cells;
    bits_embeds += o.bits_embeds;
    heads += o.heads;
    return *this;
  }
};

/// Column prefix sums of the bit-compression matrix. The affine map of
/// [-1 x pad, bits] costs O(d * popcount) through them.
class BitsTable {
 public:
  explicit BitsTable(const ParamStore& params);
  /// Returns the stacked [h; c] embedding (2d).
  Vector embed(const BitsCode& code) const;

 private:
  const ParamStore* params_;
  Matrix prefix_;  // 2d x (L + 1); column k = sum of the first k columns
};

using Slot = std::int32_t;

/// Input fed to an LSTM cell alongside its previous state.
enum class LstmInput { TokenLeft, TokenRight, SlotHidden };

/// Reverse-mode tape over StatePair-valued slots. Every record call takes a
/// batch of slots and runs one dense kernel over the whole batch, so the same
/// tape serves both one-item-at-a-time recording and level-batched recording.
///
/// Slot 0 is the constant zero state. Slot values are write-once.
class Tape {
 public:
  explicit Tape(const ParamStore& params, bool share_lstm = false);

  int d() const { return d_; }
  const ParamStore& params() const { return *params_; }

  static constexpr Slot zero() { return 0; }
  /// External state; its gradient can be read back after backward().
  Slot input(const StatePair& s);

  std::vector<Slot> tree_cell(TreeKind kind, std::span<const Slot> left, std::span<const Slot> right);
  std::vector<Slot> lstm_cell(LstmKind kind, std::span<const Slot> prev, LstmInput input,
                              std::span<const Slot> x = {});
  /// h += PE(offset); c unchanged.
  std::vector<Slot> add_position(std::span<const Slot> in, std::span<const std::int64_t> offsets);
  std::vector<Slot> bits_embed(std::span<const BitsCode> codes);
  /// Records log p(outcome) terms of sigma(W^T h + b) heads; returns p(true)
  /// per item.
  std::vector<double> observe(HeadKind kind, std::span<const Slot> states,
                              std::span<const std::uint8_t> outcomes);

  Slot tree_cell(TreeKind kind, Slot left, Slot right);
  Slot lstm_cell(LstmKind kind, Slot prev, LstmInput input, Slot x = 0);
  Slot add_position(Slot in, std::int64_t offset);
  Slot bits_embed(const BitsCode& code);
  double observe(HeadKind kind, Slot state, bool outcome);

  /// Sum of all recorded log-probability terms.
  double log_prob() const { return log_prob_; }
  bool empty() const { return ops_.empty(); }

  StatePair value(Slot s) const;
  std::span<const double> hidden(Slot s) const;

  /// Adds `g` to the incoming gradient of slot `s`.
  void seed(Slot s, const StatePair& g);

  /// Accumulates the gradient of  scale * log_prob() + sum_s <seed_s, value_s>
  /// into `grad_out` (ParamStore layout). May run once; throws
  /// std::logic_error on an empty tape or a second call.
  void backward(std::span<double> grad_out, double scale = 1.0);

  /// Gradient reaching slot `s`; valid after backward().
  StatePair grad(Slot s) const;

  /// Live StatePairs held by the tape (the zero slot excluded).
  std::size_t num_states() const { return num_slots_ - 1; }
  const OpCounter& counter() const { return counter_; }

 private:
  enum class OpKind : std::uint8_t { Tree, Lstm, AddPos, Bits, Head };

  struct Op {
    OpKind kind = OpKind::Tree;
    int which = 0;               // TreeKind / LstmKind / HeadKind
    LstmInput input = LstmInput::SlotHidden;
    std::vector<Slot> a, b, out;
    std::vector<std::int64_t> offsets;
    std::vector<BitsCode> codes;
    std::vector<std::uint8_t> outcomes;
    std::vector<double> probs;
    CellCache cache;
  };

  Slot new_slots(std::size_t count);
  double* hptr(Slot s) { return values_.data() + static_cast<std::size_t>(s) * 2 * d_; }
  const double* hptr(Slot s) const { return values_.data() + static_cast<std::size_t>(s) * 2 * d_; }
  double* gptr(Slot s) { return grads_.data() + static_cast<std::size_t>(s) * 2 * d_; }

  void gather_h(std::span<const Slot> slots, Matrix& dst, Eigen::Index row0) const;
  void gather_c(std::span<const Slot> slots, Matrix& dst) const;
  void scatter(std::span<const Slot> out, const Matrix& h, const Matrix& c);
  LstmKind resolve(LstmKind k) const { return share_lstm_ ? LstmKind::Top : k; }

  void backward_tree(const Op& op, std::span<double> grad_out);
  void backward_lstm(const Op& op, std::span<double> grad_out);
  void backward_head(const Op& op, std::span<double> grad_out, double scale);
  void backward_bits(const Op& op, Matrix& neg_accum, std::span<double> grad_out);

  const ParamStore* params_;
  int d_;
  bool share_lstm_;
  AlignedVector values_;
  AlignedVector grads_;
  std::size_t num_slots_ = 1;
  std::vector<Op> ops_;
  std::vector<std::pair<Slot, StatePair>> seeds_;
  double log_prob_ = 0.0;
  bool consumed_ = false;
  std::unique_ptr<BitsTable> bits_;
  OpCounter counter_;
};

}  // namespace bigg
