#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bigg/params.hpp"

namespace bigg {

/// (hidden, cell) pair carried by every recurrent state. Heads read only h.
struct StatePair {
  Vector h;
  Vector c;

  static StatePair zero(int d) { return {Vector::Zero(d), Vector::Zero(d)}; }
  int dim() const { return static_cast<int>(h.size()); }
};

enum class TreeKind { Bot, Top, Row };
enum class LstmKind { Top, Seq };
enum class HeadKind { Left, Right, Gate };

Block weight_block(TreeKind k);
Block bias_block(TreeKind k);
Block weight_block(LstmKind k);
Block bias_block(LstmKind k);
Block weight_block(HeadKind k);
Block bias_block(HeadKind k);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
/// log(sigmoid(z)) without overflow for large |z|.
double log_sigmoid(double z);

// ---------------------------------------------------------------------------
// Batched kernels. Every matrix argument holds one batch item per column.

/// Activations kept for the reverse pass.
struct CellCache {
  Matrix gates;   // post-nonlinearity gates
  Matrix tanh_c;  // tanh of the new cell state
};

/// LSTM: z = W [x; h] + b, gates (i, f, o, g); c' = f*c + i*g; h' = o*tanh(c').
void lstm_forward(const ConstMatrixMap& W, const ConstMatrixMap& b, const Matrix& xh,
                  const Matrix& c_prev, Matrix& h_out, Matrix& c_out, CellCache* cache);
/// Accumulates into dW, db; overwrites dxh (2d x B) and dc_prev.
void lstm_backward(const ConstMatrixMap& W, const Matrix& xh, const Matrix& c_prev,
                   const CellCache& cache, const Matrix& dh, const Matrix& dc, Matrix& dxh,
                   Matrix& dc_prev, MatrixMap dW, MatrixMap db);

/// Binary N-ary TreeLSTM: z = W [h_l; h_r] + b, gates (i, f_l, f_r, o, u);
/// c = i*u + f_l*c_l + f_r*c_r; h = o*tanh(c).
void tree_forward(const ConstMatrixMap& W, const ConstMatrixMap& b, const Matrix& hlr,
                  const Matrix& c_left, const Matrix& c_right, Matrix& h_out, Matrix& c_out,
                  CellCache* cache);
void tree_backward(const ConstMatrixMap& W, const Matrix& hlr, const Matrix& c_left,
                   const Matrix& c_right, const CellCache& cache, const Matrix& dh,
                   const Matrix& dc, Matrix& dhlr, Matrix& dc_left, Matrix& dc_right,
                   MatrixMap dW, MatrixMap db);

// ---------------------------------------------------------------------------
// Adjacency slices for bit compression.

/// Sparse form of a ternary code: `length` adjacency bits (b <= L) of which
/// the 0-based positions in `ones` are set. The dense code is L - b entries of
/// -1 followed by the b bits.
struct BitsCode {
  int length = 0;
  std::vector<int> ones;
};

/// Dense ternary vector [-1 x (L - b), slice...]. Throws std::invalid_argument
/// when b > L.
std::vector<std::int8_t> bits_encode(std::span<const std::uint8_t> slice, int L);
std::vector<std::int8_t> to_dense(const BitsCode& code, int L);

// ---------------------------------------------------------------------------
// Single-item entry points.

StatePair lstm_cell(const StatePair& prev, const Vector& input, const ParamStore& params,
                    LstmKind kind = LstmKind::Top);
StatePair tree_cell(const StatePair& left, const StatePair& right, TreeKind which,
                    const ParamStore& params);
/// sigma(W^T h + b).
double bernoulli_head(const StatePair& state, HeadKind which, const ParamStore& params);
/// Affine map of a dense ternary code of length L to (h, c).
StatePair bits_embed(std::span<const std::int8_t> code, const ParamStore& params);
/// Sparse-code version; identical arithmetic to the dense one up to summation order.
StatePair bits_embed(const BitsCode& code, const ParamStore& params);

/// Sinusoidal position encoding: [2i] = sin(k / 10000^(2i/d)), [2i+1] = cos(...).
Vector pos_encode(std::int64_t k, int d);

void check_dim(const StatePair& s, int d);

}  // namespace bigg
