#include "bigg/cells.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bigg {

Block weight_block(TreeKind k) {
  switch (k) {
    case TreeKind::Bot: return Block::TreeBotW;
    case TreeKind::Top: return Block::TreeTopW;
    case TreeKind::Row: return Block::TreeRowW;
  }
  return Block::TreeBotW;
}
Block bias_block(TreeKind k) { return static_cast<Block>(static_cast<int>(weight_block(k)) + 1); }

Block weight_block(LstmKind k) { return k == LstmKind::Top ? Block::LstmTopW : Block::SeqW; }
Block bias_block(LstmKind k) { return static_cast<Block>(static_cast<int>(weight_block(k)) + 1); }

Block weight_block(HeadKind k) {
  switch (k) {
    case HeadKind::Left: return Block::HeadLeftW;
    case HeadKind::Right: return Block::HeadRightW;
    case HeadKind::Gate: return Block::GateW;
  }
  return Block::HeadLeftW;
}
Block bias_block(HeadKind k) { return static_cast<Block>(static_cast<int>(weight_block(k)) + 1); }

double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

namespace {

template <class M>
auto sigm(const M& m) {
  return (1.0 + (-m.array()).exp()).inverse();
}

}  // namespace

void lstm_forward(const ConstMatrixMap& W, const ConstMatrixMap& b, const Matrix& xh,
                  const Matrix& c_prev, Matrix& h_out, Matrix& c_out, CellCache* cache) {
  const Eigen::Index d = c_prev.rows();
  Matrix z = W * xh;
  z.colwise() += b.col(0);
  z.topRows(3 * d) = sigm(z.topRows(3 * d));
  z.bottomRows(d) = z.bottomRows(d).array().tanh();
  const auto i = z.middleRows(0, d).array();
  const auto f = z.middleRows(d, d).array();
  const auto o = z.middleRows(2 * d, d).array();
  const auto g = z.middleRows(3 * d, d).array();
  c_out = (f * c_prev.array() + i * g).matrix();
  Matrix tc = c_out.array().tanh().matrix();
  h_out = (o * tc.array()).matrix();
  if (cache) {
    cache->gates = std::move(z);
    cache->tanh_c = std::move(tc);
  }
}

void lstm_backward(const ConstMatrixMap& W, const Matrix& xh, const Matrix& c_prev,
                   const CellCache& cache, const Matrix& dh, const Matrix& dc, Matrix& dxh,
                   Matrix& dc_prev, MatrixMap dW, MatrixMap db) {
  const Eigen::Index d = c_prev.rows();
  const auto& z = cache.gates;
  const auto i = z.middleRows(0, d).array();
  const auto f = z.middleRows(d, d).array();
  const auto o = z.middleRows(2 * d, d).array();
  const auto g = z.middleRows(3 * d, d).array();
  const auto tc = cache.tanh_c.array();

  const Eigen::ArrayXXd dct = dc.array() + dh.array() * o * (1.0 - tc * tc);
  Matrix dz(4 * d, z.cols());
  dz.middleRows(0, d) = (dct * g * i * (1.0 - i)).matrix();
  dz.middleRows(d, d) = (dct * c_prev.array() * f * (1.0 - f)).matrix();
  dz.middleRows(2 * d, d) = (dh.array() * tc * o * (1.0 - o)).matrix();
  dz.middleRows(3 * d, d) = (dct * i * (1.0 - g * g)).matrix();
  dc_prev = (dct * f).matrix();

  dW.noalias() += dz * xh.transpose();
  db.col(0) += dz.rowwise().sum();
  dxh.noalias() = W.transpose() * dz;
}

void tree_forward(const ConstMatrixMap& W, const ConstMatrixMap& b, const Matrix& hlr,
                  const Matrix& c_left, const Matrix& c_right, Matrix& h_out, Matrix& c_out,
                  CellCache* cache) {
  const Eigen::Index d = c_left.rows();
  Matrix z = W * hlr;
  z.colwise() += b.col(0);
  z.topRows(4 * d) = sigm(z.topRows(4 * d));
  z.bottomRows(d) = z.bottomRows(d).array().tanh();
  const auto i = z.middleRows(0, d).array();
  const auto fl = z.middleRows(d, d).array();
  const auto fr = z.middleRows(2 * d, d).array();
  const auto o = z.middleRows(3 * d, d).array();
  const auto u = z.middleRows(4 * d, d).array();
  c_out = (i * u + fl * c_left.array() + fr * c_right.array()).matrix();
  Matrix tc = c_out.array().tanh().matrix();
  h_out = (o * tc.array()).matrix();
  if (cache) {
    cache->gates = std::move(z);
    cache->tanh_c = std::move(tc);
  }
}

void tree_backward(const ConstMatrixMap& W, const Matrix& hlr, const Matrix& c_left,
                   const Matrix& c_right, const CellCache& cache, const Matrix& dh,
                   const Matrix& dc, Matrix& dhlr, Matrix& dc_left, Matrix& dc_right,
                   MatrixMap dW, MatrixMap db) {
  const Eigen::Index d = c_left.rows();
  const auto& z = cache.gates;
  const auto i = z.middleRows(0, d).array();
  const auto fl = z.middleRows(d, d).array();
  const auto fr = z.middleRows(2 * d, d).array();
  const auto o = z.middleRows(3 * d, d).array();
  const auto u = z.middleRows(4 * d, d).array();
  const auto tc = cache.tanh_c.array();

  const Eigen::ArrayXXd dct = dc.array() + dh.array() * o * (1.0 - tc * tc);
  Matrix dz(5 * d, z.cols());
  dz.middleRows(0, d) = (dct * u * i * (1.0 - i)).matrix();
  dz.middleRows(d, d) = (dct * c_left.array() * fl * (1.0 - fl)).matrix();
  dz.middleRows(2 * d, d) = (dct * c_right.array() * fr * (1.0 - fr)).matrix();
  dz.middleRows(3 * d, d) = (dh.array() * tc * o * (1.0 - o)).matrix();
  dz.middleRows(4 * d, d) = (dct * i * (1.0 - u * u)).matrix();
  dc_left = (dct * fl).matrix();
  dc_right = (dct * fr).matrix();

  dW.noalias() += dz * hlr.transpose();
  db.col(0) += dz.rowwise().sum();
  dhlr.noalias() = W.transpose() * dz;
}

std::vector<std::int8_t> bits_encode(std::span<const std::uint8_t> slice, int L) {
  if (static_cast<int>(slice.size()) > L)
    throw std::invalid_argument("slice of length " + std::to_string(slice.size()) +
                                " exceeds bit-compression length " + std::to_string(L));
  std::vector<std::int8_t> out(static_cast<std::size_t>(L), -1);
  const std::size_t pad = static_cast<std::size_t>(L) - slice.size();
  for (std::size_t k = 0; k < slice.size(); ++k) out[pad + k] = slice[k] ? 1 : 0;
  return out;
}

std::vector<std::int8_t> to_dense(const BitsCode& code, int L) {
  if (code.length > L || code.length < 0) throw std::invalid_argument("bits code longer than L");
  std::vector<std::int8_t> out(static_cast<std::size_t>(L), -1);
  const int pad = L - code.length;
  for (int k = 0; k < code.length; ++k) out[static_cast<std::size_t>(pad + k)] = 0;
  for (int p : code.ones) out[static_cast<std::size_t>(pad + p)] = 1;
  return out;
}

void check_dim(const StatePair& s, int d) {
  if (s.h.size() != d || s.c.size() != d)
    throw std::invalid_argument("state dimension " + std::to_string(s.h.size()) + "/" +
                                std::to_string(s.c.size()) + " does not match d=" + std::to_string(d));
}

StatePair lstm_cell(const StatePair& prev, const Vector& input, const ParamStore& params,
                    LstmKind kind) {
  const int d = params.d();
  check_dim(prev, d);
  if (input.size() != d) throw std::invalid_argument("lstm input dimension mismatch");
  Matrix xh(2 * d, 1);
  xh.col(0) << input, prev.h;
  Matrix c_prev = prev.c;
  Matrix h, c;
  lstm_forward(params.mat(weight_block(kind)), params.mat(bias_block(kind)), xh, c_prev, h, c, nullptr);
  return {h.col(0), c.col(0)};
}

StatePair tree_cell(const StatePair& left, const StatePair& right, TreeKind which,
                    const ParamStore& params) {
  const int d = params.d();
  check_dim(left, d);
  check_dim(right, d);
  Matrix hlr(2 * d, 1);
  hlr.col(0) << left.h, right.h;
  Matrix cl = left.c, cr = right.c;
  Matrix h, c;
  tree_forward(params.mat(weight_block(which)), params.mat(bias_block(which)), hlr, cl, cr, h, c, nullptr);
  return {h.col(0), c.col(0)};
}

double bernoulli_head(const StatePair& state, HeadKind which, const ParamStore& params) {
  check_dim(state, params.d());
  const double z = params.mat(weight_block(which)).row(0).dot(state.h) + params.mat(bias_block(which))(0, 0);
  return sigmoid(z);
}

StatePair bits_embed(std::span<const std::int8_t> code, const ParamStore& params) {
  const int d = params.d(), L = params.bits_length();
  if (static_cast<int>(code.size()) != L)
    throw std::invalid_argument("ternary code length " + std::to_string(code.size()) + " != L=" + std::to_string(L));
  Vector x(L);
  for (int k = 0; k < L; ++k) {
    if (code[static_cast<std::size_t>(k)] < -1 || code[static_cast<std::size_t>(k)] > 1)
      throw std::invalid_argument("ternary code entries must be -1, 0 or 1");
    x(k) = code[static_cast<std::size_t>(k)];
  }
  Vector out = params.mat(Block::BitsW) * x + params.mat(Block::BitsB).col(0);
  return {out.head(d), out.tail(d)};
}

StatePair bits_embed(const BitsCode& code, const ParamStore& params) {
  const int d = params.d(), L = params.bits_length();
  if (code.length > L || code.length < 0) throw std::invalid_argument("bits code longer than L");
  const auto W = params.mat(Block::BitsW);
  const int pad = L - code.length;
  Vector out = params.mat(Block::BitsB).col(0);
  for (int k = 0; k < pad; ++k) out -= W.col(k);
  for (int p : code.ones) out += W.col(pad + p);
  return {out.head(d), out.tail(d)};
}

Vector pos_encode(std::int64_t k, int d) {
  Vector pe(d);
  for (int j = 0; j < d; ++j) {
    const int i = j / 2;
    const double div = std::pow(10000.0, 2.0 * i / d);
    const double arg = static_cast<double>(k) / div;
    pe(j) = (j % 2 == 0) ? std::sin(arg) : std::cos(arg);
  }
  return pe;
}

}  // namespace bigg
