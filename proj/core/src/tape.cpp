#include "bigg/tape.hpp"

#include <algorithm>
#include <stdexcept>

namespace bigg {

BitsTable::BitsTable(const ParamStore& params) : params_(&params) {
  const auto W = params.mat(Block::BitsW);
  prefix_.setZero(W.rows(), W.cols() + 1);
  for (Eigen::Index k = 0; k < W.cols(); ++k) prefix_.col(k + 1) = prefix_.col(k) + W.col(k);
}

Vector BitsTable::embed(const BitsCode& code) const {
  const int L = params_->bits_length();
  if (code.length < 0 || code.length > L) throw std::invalid_argument("bits code longer than L");
  const auto W = params_->mat(Block::BitsW);
  const int pad = L - code.length;
  Vector out = params_->mat(Block::BitsB).col(0) - prefix_.col(pad);
  for (int p : code.ones) out += W.col(pad + p);
  return out;
}

Tape::Tape(const ParamStore& params, bool share_lstm)
    : params_(&params), d_(params.d()), share_lstm_(share_lstm) {
  values_.assign(static_cast<std::size_t>(2 * d_), 0.0);
}

Slot Tape::new_slots(std::size_t count) {
  const auto first = static_cast<Slot>(num_slots_);
  num_slots_ += count;
  values_.resize(num_slots_ * 2 * static_cast<std::size_t>(d_));
  return first;
}

Slot Tape::input(const StatePair& s) {
  check_dim(s, d_);
  const Slot slot = new_slots(1);
  double* p = hptr(slot);
  std::copy(s.h.data(), s.h.data() + d_, p);
  std::copy(s.c.data(), s.c.data() + d_, p + d_);
  return slot;
}

void Tape::gather_h(std::span<const Slot> slots, Matrix& dst, Eigen::Index row0) const {
  for (std::size_t k = 0; k < slots.size(); ++k)
    dst.col(static_cast<Eigen::Index>(k)).segment(row0, d_) =
        Eigen::Map<const Vector>(hptr(slots[k]), d_);
}

void Tape::gather_c(std::span<const Slot> slots, Matrix& dst) const {
  dst.resize(d_, static_cast<Eigen::Index>(slots.size()));
  for (std::size_t k = 0; k < slots.size(); ++k)
    dst.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Vector>(hptr(slots[k]) + d_, d_);
}

void Tape::scatter(std::span<const Slot> out, const Matrix& h, const Matrix& c) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    double* p = hptr(out[k]);
    Eigen::Map<Vector>(p, d_) = h.col(static_cast<Eigen::Index>(k));
    Eigen::Map<Vector>(p + d_, d_) = c.col(static_cast<Eigen::Index>(k));
  }
}

namespace {

std::vector<Slot> iota_slots(Slot first, std::size_t count) {
  std::vector<Slot> s(count);
  for (std::size_t k = 0; k < count; ++k) s[k] = first + static_cast<Slot>(k);
  return s;
}

void check_consumed(bool consumed) {
  if (consumed) throw std::logic_error("tape already consumed by backward()");
}

}  // namespace

std::vector<Slot> Tape::tree_cell(TreeKind kind, std::span<const Slot> left, std::span<const Slot> right) {
  check_consumed(consumed_);
  if (left.size() != right.size()) throw std::invalid_argument("tree_cell batch size mismatch");
  const auto B = static_cast<Eigen::Index>(left.size());
  if (B == 0) return {};
  Matrix hlr(2 * d_, B), cl, cr, h, c;
  gather_h(left, hlr, 0);
  gather_h(right, hlr, d_);
  gather_c(left, cl);
  gather_c(right, cr);
  Op op;
  op.kind = OpKind::Tree;
  op.which = static_cast<int>(kind);
  tree_forward(params_->mat(weight_block(kind)), params_->mat(bias_block(kind)), hlr, cl, cr, h, c, &op.cache);
  op.a.assign(left.begin(), left.end());
  op.b.assign(right.begin(), right.end());
  op.out = iota_slots(new_slots(left.size()), left.size());
  scatter(op.out, h, c);
  counter_.tree_cells += B;
  auto out = op.out;
  ops_.push_back(std::move(op));
  return out;
}

std::vector<Slot> Tape::lstm_cell(LstmKind kind, std::span<const Slot> prev, LstmInput input,
                                  std::span<const Slot> x) {
  check_consumed(consumed_);
  const auto B = static_cast<Eigen::Index>(prev.size());
  if (input == LstmInput::SlotHidden && x.size() != prev.size())
    throw std::invalid_argument("lstm_cell input batch size mismatch");
  if (B == 0) return {};
  kind = resolve(kind);
  Matrix xh(2 * d_, B), cp, h, c;
  if (input == LstmInput::SlotHidden) {
    gather_h(x, xh, 0);
  } else {
    const auto tok = params_->mat(input == LstmInput::TokenLeft ? Block::TokLeft : Block::TokRight);
    xh.topRows(d_).colwise() = tok.col(0);
  }
  gather_h(prev, xh, d_);
  gather_c(prev, cp);
  Op op;
  op.kind = OpKind::Lstm;
  op.which = static_cast<int>(kind); op.input = input;
  lstm_forward(params_->mat(weight_block(kind)), params_->mat(bias_block(kind)), xh, cp, h, c, &op.cache);
  op.a.assign(prev.begin(), prev.end());
  if (input == LstmInput::SlotHidden) op.b.assign(x.begin(), x.end());
  op.out = iota_slots(new_slots(prev.size()), prev.size());
  scatter(op.out, h, c);
  counter_.lstm_cells += B;
  auto out = op.out;
  ops_.push_back(std::move(op));
  return out;
}

std::vector<Slot> Tape::add_position(std::span<const Slot> in, std::span<const std::int64_t> offsets) {
  check_consumed(consumed_);
  if (in.size() != offsets.size()) throw std::invalid_argument("add_position size mismatch");
  if (in.empty()) return {};
  Op op;
  op.kind = OpKind::AddPos;
  op.a.assign(in.begin(), in.end());
  op.offsets.assign(offsets.begin(), offsets.end());
  op.out = iota_slots(new_slots(in.size()), in.size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    const Vector pe = pos_encode(offsets[k], d_);
    const double* src = hptr(in[k]);
    double* dst = hptr(op.out[k]);
    for (int j = 0; j < d_; ++j) dst[j] = src[j] + pe(j);
    std::copy(src + d_, src + 2 * d_, dst + d_);
  }
  auto out = op.out;
  ops_.push_back(std::move(op));
  return out;
}

std::vector<Slot> Tape::bits_embed(std::span<const BitsCode> codes) {
  check_consumed(consumed_);
  if (codes.empty()) return {};
  if (!bits_) bits_ = std::make_unique<BitsTable>(*params_);
  Op op;
  op.kind = OpKind::Bits;
  op.codes.assign(codes.begin(), codes.end());
  op.out = iota_slots(new_slots(codes.size()), codes.size());
  for (std::size_t k = 0; k < codes.size(); ++k) {
    const Vector v = bits_->embed(codes[k]);
    std::copy(v.data(), v.data() + 2 * d_, hptr(op.out[k]));
  }
  counter_.bits_embeds += static_cast<std::int64_t>(codes.size());
  auto out = op.out;
  ops_.push_back(std::move(op));
  return out;
}

std::vector<double> Tape::observe(HeadKind kind, std::span<const Slot> states,
                                  std::span<const std::uint8_t> outcomes) {
  check_consumed(consumed_);
  if (states.size() != outcomes.size()) throw std::invalid_argument("observe size mismatch");
  if (states.empty()) return {};
  const auto w = params_->mat(weight_block(kind));
  const double b = params_->mat(bias_block(kind))(0, 0);
  Op op;
  op.kind = OpKind::Head;
  op.which = static_cast<int>(kind);
  op.a.assign(states.begin(), states.end());
  op.outcomes.assign(outcomes.begin(), outcomes.end());
  op.probs.resize(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double z = w.row(0).dot(Eigen::Map<const Vector>(hptr(states[k]), d_)) + b;
    op.probs[k] = sigmoid(z);
    log_prob_ += outcomes[k] ? log_sigmoid(z) : log_sigmoid(-z);
  }
  counter_.heads += static_cast<std::int64_t>(states.size());
  auto probs = op.probs;
  ops_.push_back(std::move(op));
  return probs;
}

Slot Tape::tree_cell(TreeKind kind, Slot left, Slot right) {
  return tree_cell(kind, std::span<const Slot>(&left, 1), std::span<const Slot>(&right, 1))[0];
}

Slot Tape::lstm_cell(LstmKind kind, Slot prev, LstmInput input, Slot x) {
  const std::span<const Slot> xs = input == LstmInput::SlotHidden ? std::span<const Slot>(&x, 1)
                                                                 : std::span<const Slot>();
  return lstm_cell(kind, std::span<const Slot>(&prev, 1), input, xs)[0];
}

Slot Tape::add_position(Slot in, std::int64_t offset) {
  return add_position(std::span<const Slot>(&in, 1), std::span<const std::int64_t>(&offset, 1))[0];
}

Slot Tape::bits_embed(const BitsCode& code) { return bits_embed(std::span<const BitsCode>(&code, 1))[0]; }

double Tape::observe(HeadKind kind, Slot state, bool outcome) {
  const std::uint8_t o = outcome ? 1 : 0;
  return observe(kind, std::span<const Slot>(&state, 1), std::span<const std::uint8_t>(&o, 1))[0];
}

StatePair Tape::value(Slot s) const {
  if (s < 0 || static_cast<std::size_t>(s) >= num_slots_) throw std::out_of_range("bad slot");
  const double* p = hptr(s);
  return {Eigen::Map<const Vector>(p, d_), Eigen::Map<const Vector>(p + d_, d_)};
}

std::span<const double> Tape::hidden(Slot s) const { return {hptr(s), static_cast<std::size_t>(d_)}; }

void Tape::seed(Slot s, const StatePair& g) {
  check_consumed(consumed_);
  check_dim(g, d_);
  seeds_.emplace_back(s, g);
}

StatePair Tape::grad(Slot s) const {
  if (!consumed_) throw std::logic_error("gradients requested before backward()");
  const double* p = grads_.data() + static_cast<std::size_t>(s) * 2 * d_;
  return {Eigen::Map<const Vector>(p, d_), Eigen::Map<const Vector>(p + d_, d_)};
}

namespace {

void gather_grad(std::span<const double> grads, std::span<const Slot> slots, int d, Matrix& dh, Matrix& dc) {
  const auto B = static_cast<Eigen::Index>(slots.size());
  dh.resize(d, B);
  dc.resize(d, B);
  for (Eigen::Index k = 0; k < B; ++k) {
    const double* p = grads.data() + static_cast<std::size_t>(slots[static_cast<std::size_t>(k)]) * 2 * d;
    dh.col(k) = Eigen::Map<const Vector>(p, d);
    dc.col(k) = Eigen::Map<const Vector>(p + d, d);
  }
}

}  // namespace

void Tape::backward_tree(const Op& op, std::span<double> grad_out) {
  const auto kind = static_cast<TreeKind>(op.which);
  const auto B = static_cast<Eigen::Index>(op.out.size());
  Matrix hlr(2 * d_, B), cl, cr, dh, dc, dhlr, dcl, dcr;
  gather_h(op.a, hlr, 0);
  gather_h(op.b, hlr, d_);
  gather_c(op.a, cl);
  gather_c(op.b, cr);
  gather_grad(grads_, op.out, d_, dh, dc);
  tree_backward(params_->mat(weight_block(kind)), hlr, cl, cr, op.cache, dh, dc, dhlr, dcl, dcr,
                params_->view(grad_out, weight_block(kind)), params_->view(grad_out, bias_block(kind)));
  for (Eigen::Index k = 0; k < B; ++k) {
    double* gl = gptr(op.a[static_cast<std::size_t>(k)]);
    Eigen::Map<Vector>(gl, d_) += dhlr.col(k).head(d_);
    Eigen::Map<Vector>(gl + d_, d_) += dcl.col(k);
    double* gr = gptr(op.b[static_cast<std::size_t>(k)]);
    Eigen::Map<Vector>(gr, d_) += dhlr.col(k).tail(d_);
    Eigen::Map<Vector>(gr + d_, d_) += dcr.col(k);
  }
}

void Tape::backward_lstm(const Op& op, std::span<double> grad_out) {
  const auto kind = static_cast<LstmKind>(op.which);
  const auto B = static_cast<Eigen::Index>(op.out.size());
  Matrix xh(2 * d_, B), cp, dh, dc, dxh, dcp;
  if (op.input == LstmInput::SlotHidden) {
    gather_h(op.b, xh, 0);
  } else {
    const auto tok = params_->mat(op.input == LstmInput::TokenLeft ? Block::TokLeft : Block::TokRight);
    xh.topRows(d_).colwise() = tok.col(0);
  }
  gather_h(op.a, xh, d_);
  gather_c(op.a, cp);
  gather_grad(grads_, op.out, d_, dh, dc);
  lstm_backward(params_->mat(weight_block(kind)), xh, cp, op.cache, dh, dc, dxh, dcp,
                params_->view(grad_out, weight_block(kind)), params_->view(grad_out, bias_block(kind)));
  if (op.input == LstmInput::SlotHidden) {
    for (Eigen::Index k = 0; k < B; ++k)
      Eigen::Map<Vector>(gptr(op.b[static_cast<std::size_t>(k)]), d_) += dxh.col(k).head(d_);
  } else {
    auto tok = params_->view(grad_out, op.input == LstmInput::TokenLeft ? Block::TokLeft : Block::TokRight);
    tok.col(0) += dxh.topRows(d_).rowwise().sum();
  }
  for (Eigen::Index k = 0; k < B; ++k) {
    double* gp = gptr(op.a[static_cast<std::size_t>(k)]);
    Eigen::Map<Vector>(gp, d_) += dxh.col(k).tail(d_);
    Eigen::Map<Vector>(gp + d_, d_) += dcp.col(k);
  }
}

void Tape::backward_head(const Op& op, std::span<double> grad_out, double scale) {
  const auto kind = static_cast<HeadKind>(op.which);
  const auto w = params_->mat(weight_block(kind));
  auto dw = params_->view(grad_out, weight_block(kind));
  auto db = params_->view(grad_out, bias_block(kind));
  for (std::size_t k = 0; k < op.a.size(); ++k) {
    // d/dz log p(outcome) = outcome - sigma(z)
    const double dz = scale * ((op.outcomes[k] ? 1.0 : 0.0) - op.probs[k]);
    const Eigen::Map<const Vector> h(hptr(op.a[k]), d_);
    dw.row(0) += dz * h.transpose();
    db(0, 0) += dz;
    Eigen::Map<Vector>(gptr(op.a[k]), d_) += dz * w.row(0).transpose();
  }
}

void Tape::backward_bits(const Op& op, Matrix& neg_accum, std::span<double> grad_out) {
  const int L = params_->bits_length();
  auto dW = params_->view(grad_out, Block::BitsW);
  auto db = params_->view(grad_out, Block::BitsB);
  for (std::size_t k = 0; k < op.out.size(); ++k) {
    const Eigen::Map<const Vector> g(gptr(op.out[k]), 2 * d_);
    const BitsCode& code = op.codes[k];
    const int pad = L - code.length;
    db.col(0) += g;
    neg_accum.col(pad) += g;
    for (int p : code.ones) dW.col(pad + p) += g;
  }
}

void Tape::backward(std::span<double> grad_out, double scale) {
  if (consumed_) throw std::logic_error("backward() already ran on this tape");
  if (ops_.empty()) throw std::logic_error("backward() before any forward operation was recorded");
  if (grad_out.size() != params_->size()) throw std::invalid_argument("gradient buffer size mismatch");
  consumed_ = true;
  grads_.assign(values_.size(), 0.0);
  for (const auto& [s, g] : seeds_) {
    double* p = gptr(s);
    Eigen::Map<Vector>(p, d_) += g.h;
    Eigen::Map<Vector>(p + d_, d_) += g.c;
  }
  Matrix neg_accum;
  if (bits_) neg_accum.setZero(2 * d_, params_->bits_length() + 1);
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    switch (it->kind) {
      case OpKind::Tree: backward_tree(*it, grad_out); break;
      case OpKind::Lstm: backward_lstm(*it, grad_out); break;
      case OpKind::Head: backward_head(*it, grad_out, scale); break;
      case OpKind::Bits: backward_bits(*it, neg_accum, grad_out); break;
      case OpKind::AddPos:
        for (std::size_t k = 0; k < it->out.size(); ++k) {
          const double* src = gptr(it->out[k]);
          double* dst = gptr(it->a[k]);
          for (int j = 0; j < 2 * d_; ++j) dst[j] += src[j];
        }
        break;
    }
    // The zero slot is a constant.
    std::fill(grads_.begin(), grads_.begin() + 2 * d_, 0.0);
  }
  if (bits_) {
    // Column j received -g from every code whose padding covers j, i.e. pad > j.
    auto dW = params_->view(grad_out, Block::BitsW);
    Vector suffix = Vector::Zero(2 * d_);
    for (Eigen::Index j = dW.cols() - 1; j >= 0; --j) {
      suffix += neg_accum.col(j + 1);
      dW.col(j) -= suffix;
    }
  }
}

}  // namespace bigg
