#pragma once

#include <cstdint>

#include "bigg/cells.hpp"
#include "bigg/tape.hpp"

namespace bigg {

struct ModelOptions {
  /// When a node's left child is absent its right child is implied and
  /// contributes no factor. Disabling it gives the literal, leaky reading.
  bool force_children = true;
  /// Use the top-down LSTM parameters for the row-summary LSTM as well.
  bool share_lstm = false;
};

// Row and forest recursions are written once against this executor
// interface: DirectExec evaluates values immediately, TapeExec records
// differentiable slots.

class DirectExec {
 public:
  using Handle = StatePair;

  DirectExec(const ParamStore& params, const ModelOptions& opts, OpCounter* counter = nullptr)
      : params_(&params), bits_(params), share_lstm_(opts.share_lstm), counter_(counter) {}

  const ParamStore& params() const { return *params_; }
  Handle zero() const { return StatePair::zero(params_->d()); }

  Handle tree(TreeKind kind, const Handle& l, const Handle& r) {
    if (counter_) ++counter_->tree_cells;
    return tree_cell(l, r, kind, *params_);
  }
  Handle lstm_token(LstmKind kind, const Handle& prev, bool right_token) {
    if (counter_) ++counter_->lstm_cells;
    const auto tok = params_->mat(right_token ? Block::TokRight : Block::TokLeft);
    return lstm_cell(prev, tok.col(0), *params_, resolve(kind));
  }
  Handle lstm_state(LstmKind kind, const Handle& prev, const Handle& x) {
    if (counter_) ++counter_->lstm_cells;
    return lstm_cell(prev, x.h, *params_, resolve(kind));
  }
  Handle add_position(const Handle& s, std::int64_t k) const {
    Handle out = s;
    out.h += pos_encode(k, params_->d());
    return out;
  }
  Handle bits(const BitsCode& code) {
    if (counter_) ++counter_->bits_embeds;
    const Vector v = bits_.embed(code);
    const int d = params_->d();
    return {v.head(d), v.tail(d)};
  }
  double logit(HeadKind kind, const Handle& s) {
    if (counter_) ++counter_->heads;
    return params_->mat(weight_block(kind)).row(0).dot(s.h) + params_->mat(bias_block(kind))(0, 0);
  }
  void observe(HeadKind, const Handle&, bool) {}

 private:
  LstmKind resolve(LstmKind k) const { return share_lstm_ ? LstmKind::Top : k; }

  const ParamStore* params_;
  BitsTable bits_;
  bool share_lstm_;
  OpCounter* counter_;
};

class TapeExec {
 public:
  using Handle = Slot;

  explicit TapeExec(Tape& tape) : tape_(&tape) {}

  Tape& tape() { return *tape_; }
  const ParamStore& params() const { return tape_->params(); }
  Handle zero() const { return Tape::zero(); }
  Handle tree(TreeKind kind, Handle l, Handle r) { return tape_->tree_cell(kind, l, r); }
  Handle lstm_token(LstmKind kind, Handle prev, bool right_token) {
    return tape_->lstm_cell(kind, prev, right_token ? LstmInput::TokenRight : LstmInput::TokenLeft);
  }
  Handle lstm_state(LstmKind kind, Handle prev, Handle x) {
    return tape_->lstm_cell(kind, prev, LstmInput::SlotHidden, x);
  }
  Handle add_position(Handle s, std::int64_t k) { return tape_->add_position(s, k); }
  Handle bits(const BitsCode& code) { return tape_->bits_embed(code); }
  double logit(HeadKind kind, Handle s) const {
    const auto h = tape_->hidden(s);
    return params().mat(weight_block(kind)).row(0).dot(Eigen::Map<const Vector>(h.data(), params().d())) +
           params().mat(bias_block(kind))(0, 0);
  }
  void observe(HeadKind kind, Handle s, bool outcome) { tape_->observe(kind, s, outcome); }

 private:
  Tape* tape_;
};

}  // namespace bigg
