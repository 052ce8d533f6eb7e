#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "bigg/cells.hpp"
#include "bigg/tape.hpp"
#include "oracles.hpp"

namespace bigg {
namespace {

using testing::numeric_grad;
using testing::rel_diff;

StatePair random_state(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StatePair s = StatePair::zero(d);
  for (int i = 0; i < d; ++i) {
    s.h(i) = u(rng);
    s.c(i) = u(rng);
  }
  return s;
}

ParamStore zero_params(int d, int L) {
  ParamStore p(d, L);
  for (double& v : p.values()) v = 0.0;
  return p;
}

TEST(Cells, ZeroWeightsGiveZeroState) {
  const auto p = zero_params(4, 4);
  const auto z = StatePair::zero(4);
  const auto l = lstm_cell(z, Vector::Zero(4), p);
  EXPECT_EQ(l.h.norm(), 0.0);
  EXPECT_EQ(l.c.norm(), 0.0);
  const auto t = tree_cell(z, z, TreeKind::Bot, p);
  EXPECT_EQ(t.h.norm(), 0.0);
  EXPECT_EQ(t.c.norm(), 0.0);
  const auto b = bits_embed(to_dense(BitsCode{2, {0}}, 4), p);
  EXPECT_EQ(b.h.norm(), 0.0);
  EXPECT_DOUBLE_EQ(bernoulli_head(z, HeadKind::Left, p), 0.5);
}

TEST(Cells, LstmHandComputedTwoDim) {
  ParamStore p = zero_params(2, 2);
  auto W = p.mat(Block::LstmTopW);  // 8 x 4, rows (i, f, o, g) x 2
  auto b = p.mat(Block::LstmTopB);
  W(0, 0) = 0.5;   // i_0 <- x_0
  W(2, 2) = -0.3;  // f_0 <- h_0
  W(4, 1) = 0.7;   // o_0 <- x_1
  W(6, 0) = 1.2;   // g_0 <- x_0
  b(6, 0) = -0.1;
  b(1, 0) = 0.2;   // i_1
  b(7, 0) = 0.4;   // g_1
  const StatePair prev{Vector{{0.3, -0.2}}, Vector{{0.5, 0.1}}};
  const Vector x{{0.8, -0.6}};
  const auto out = lstm_cell(prev, x, p);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double i0 = sig(0.5 * 0.8), f0 = sig(-0.3 * 0.3), o0 = sig(0.7 * -0.6), g0 = std::tanh(1.2 * 0.8 - 0.1);
  const double c0 = f0 * 0.5 + i0 * g0;
  const double i1 = sig(0.2), f1 = 0.5, o1 = 0.5, g1 = std::tanh(0.4);
  const double c1 = f1 * 0.1 + i1 * g1;
  EXPECT_NEAR(out.c(0), c0, 1e-15);
  EXPECT_NEAR(out.h(0), o0 * std::tanh(c0), 1e-15);
  EXPECT_NEAR(out.c(1), c1, 1e-15);
  EXPECT_NEAR(out.h(1), o1 * std::tanh(c1), 1e-15);
}

TEST(Cells, TreeCellIsOrderSensitive) {
  const auto p = init_params(4, 4, 3);
  std::mt19937_64 rng(1);
  const auto a = random_state(4, rng), b = random_state(4, rng);
  const auto ab = tree_cell(a, b, TreeKind::Top, p), ba = tree_cell(b, a, TreeKind::Top, p);
  EXPECT_GT((ab.h - ba.h).norm(), 1e-6);
}

TEST(Cells, TreeCellHandComputed) {
  ParamStore p = zero_params(1, 1);
  auto W = p.mat(Block::TreeRowW);  // 5 x 2: (i, f_l, f_r, o, u) x [h_l; h_r]
  W(0, 0) = 0.4;
  W(1, 1) = -0.7;
  W(2, 0) = 0.9;
  W(3, 1) = 0.2;
  W(4, 0) = 1.1;
  p.mat(Block::TreeRowB)(4, 0) = -0.3;
  const StatePair l{Vector::Constant(1, 0.6), Vector::Constant(1, -0.4)};
  const StatePair r{Vector::Constant(1, -0.5), Vector::Constant(1, 0.8)};
  const auto out = tree_cell(l, r, TreeKind::Row, p);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double i = sig(0.4 * 0.6), fl = sig(-0.7 * -0.5), fr = sig(0.9 * 0.6), o = sig(0.2 * -0.5);
  const double u = std::tanh(1.1 * 0.6 - 0.3);
  const double c = i * u + fl * -0.4 + fr * 0.8;
  EXPECT_NEAR(out.c(0), c, 1e-15);
  EXPECT_NEAR(out.h(0), o * std::tanh(c), 1e-15);
}

TEST(Cells, ShapeMismatchRejected) {
  const auto p = init_params(4, 4, 1);
  const auto bad = StatePair::zero(3);
  EXPECT_THROW(lstm_cell(bad, Vector::Zero(4), p), std::invalid_argument);
  EXPECT_THROW(tree_cell(bad, StatePair::zero(4), TreeKind::Bot, p), std::invalid_argument);
  EXPECT_THROW(bernoulli_head(bad, HeadKind::Gate, p), std::invalid_argument);
  const std::vector<std::int8_t> short_code(3, -1);
  EXPECT_THROW(bits_embed(short_code, p), std::invalid_argument);
  const std::vector<std::int8_t> bad_entry{-1, 2, 0, 1};
  EXPECT_THROW(bits_embed(bad_entry, p), std::invalid_argument);
}

TEST(Cells, HeadValues) {
  ParamStore p = zero_params(2, 2);
  EXPECT_DOUBLE_EQ(bernoulli_head(StatePair::zero(2), HeadKind::Right, p), 0.5);
  p.mat(Block::GateB)(0, 0) = 50.0;
  EXPECT_GE(bernoulli_head(StatePair::zero(2), HeadKind::Gate, p), 1.0 - 1e-20);
  p.mat(Block::HeadLeftW)(0, 0) = 0.3;
  p.mat(Block::HeadLeftW)(0, 1) = -1.5;
  p.mat(Block::HeadLeftB)(0, 0) = 0.25;
  const StatePair s{Vector{{2.0, 0.4}}, Vector::Zero(2)};
  EXPECT_NEAR(bernoulli_head(s, HeadKind::Left, p), 1.0 / (1.0 + std::exp(-(0.6 - 0.6 + 0.25))), 1e-15);
}

TEST(Cells, LogSigmoidStable) {
  EXPECT_NEAR(log_sigmoid(0.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-9);
  EXPECT_EQ(log_sigmoid(800.0), 0.0);
  EXPECT_NEAR(log_sigmoid(3.0), std::log(1.0 / (1.0 + std::exp(-3.0))), 1e-15);
}

TEST(Cells, PositionEncoding) {
  const auto pe0 = pos_encode(0, 6);
  for (int j = 0; j < 6; ++j) EXPECT_EQ(pe0(j), j % 2 == 0 ? 0.0 : 1.0);
  EXPECT_NEAR(pos_encode(1, 8)(0), 0.841471, 1e-6);
  EXPECT_NEAR(pos_encode(7, 8)(3), std::cos(7.0 / std::pow(10000.0, 2.0 / 8.0)), 1e-15);
  for (std::int64_t k : {1, 17, 1000, 123456})
    for (int j = 0; j < 8; ++j) EXPECT_LE(std::abs(pos_encode(k, 8)(j)), 1.0);
  EXPECT_EQ(pos_encode(42, 8), pos_encode(42, 8));
}

TEST(Cells, BitsEncode) {
  using V = std::vector<std::int8_t>;
  const std::vector<std::uint8_t> s10{1, 0}, empty{}, full{1, 1, 1, 1}, five{1, 0, 1, 0, 1};
  EXPECT_EQ(bits_encode(s10, 4), (V{-1, -1, 1, 0}));
  EXPECT_EQ(bits_encode(empty, 4), (V{-1, -1, -1, -1}));
  EXPECT_EQ(bits_encode(full, 4), (V{1, 1, 1, 1}));
  EXPECT_THROW(bits_encode(five, 4), std::invalid_argument);
  EXPECT_EQ(to_dense(BitsCode{2, {0}}, 4), (V{-1, -1, 1, 0}));
}

TEST(Cells, BitsEncodeInjectiveForFixedLength) {
  std::set<std::vector<std::int8_t>> seen;
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<std::uint8_t> s(4);
    for (int i = 0; i < 4; ++i) s[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((mask >> i) & 1);
    EXPECT_TRUE(seen.insert(bits_encode(s, 6)).second);
  }
}

TEST(Cells, BitsEmbedDistinctSlices) {
  const auto p = init_params(4, 6, 9);
  const auto a = bits_embed(BitsCode{3, {0, 2}}, p), b = bits_embed(BitsCode{3, {1}}, p);
  EXPECT_GT((a.h - b.h).norm() + (a.c - b.c).norm(), 1e-6);
}

TEST(Cells, SparseAndDenseBitsAgree) {
  const auto p = init_params(4, 6, 5);
  for (const BitsCode& code : {BitsCode{0, {}}, BitsCode{3, {0, 2}}, BitsCode{6, {0, 1, 5}}}) {
    const auto dense = bits_embed(to_dense(code, 6), p);
    const auto sparse = bits_embed(code, p);
    EXPECT_LT((dense.h - sparse.h).norm(), 1e-13);
    EXPECT_LT((dense.c - sparse.c).norm(), 1e-13);
    BitsTable table(p);
    const Vector v = table.embed(code);
    EXPECT_LT((v.head(4) - dense.h).norm(), 1e-13);
  }
}

// Scalar objective <r, h> + <s, c> of a tape output, checked against finite
// differences in every parameter and in the input states.
class CellGradient : public ::testing::Test {
 protected:
  static constexpr int d = 4;
  static constexpr int L = 5;
  ParamStore params = init_params(d, L, 11);
  std::mt19937_64 rng{7};
  StatePair r = random_state(d, rng);

  double project(const StatePair& out) const { return r.h.dot(out.h) + r.c.dot(out.c); }

  template <class Build, class Direct>
  void check(Build&& build, Direct&& direct) {
    Tape tape(params);
    const Slot out = build(tape);
    tape.seed(out, r);
    std::vector<double> analytic(params.size(), 0.0);
    tape.backward(analytic);
    const auto numeric = numeric_grad(params, [&] { return direct(); });
    EXPECT_LT(rel_diff(analytic, numeric), 1e-4);
    // Untouched blocks stay exactly zero.
    double touched = 0.0;
    for (double g : analytic) touched += std::abs(g);
    EXPECT_GT(touched, 0.0);
  }
};

TEST_F(CellGradient, Lstm) {
  const StatePair prev = random_state(d, rng), x = random_state(d, rng);
  for (LstmKind kind : {LstmKind::Top, LstmKind::Seq}) {
    check(
        [&](Tape& t) { return t.lstm_cell(kind, t.input(prev), LstmInput::SlotHidden, t.input(x)); },
        [&] { return project(lstm_cell(prev, x.h, params, kind)); });
  }
  check([&](Tape& t) { return t.lstm_cell(LstmKind::Top, t.input(prev), LstmInput::TokenRight); },
        [&] { return project(lstm_cell(prev, params.mat(Block::TokRight).col(0), params, LstmKind::Top)); });
}

TEST_F(CellGradient, Tree) {
  const StatePair a = random_state(d, rng), b = random_state(d, rng);
  for (TreeKind kind : {TreeKind::Bot, TreeKind::Top, TreeKind::Row}) {
    check([&](Tape& t) { return t.tree_cell(kind, t.input(a), t.input(b)); },
          [&] { return project(tree_cell(a, b, kind, params)); });
  }
}

TEST_F(CellGradient, Bits) {
  const BitsCode code{4, {1, 3}};
  check([&](Tape& t) { return t.bits_embed(code); }, [&] { return project(bits_embed(to_dense(code, L), params)); });
}

TEST_F(CellGradient, InputStates) {
  const StatePair a = random_state(d, rng), b = random_state(d, rng);
  Tape tape(params);
  const Slot sa = tape.input(a), sb = tape.input(b);
  const Slot out = tape.add_position(tape.tree_cell(TreeKind::Top, sa, sb), 3);
  tape.seed(out, r);
  std::vector<double> sink(params.size(), 0.0);
  tape.backward(sink);
  const auto ga = tape.grad(sa);
  const double h = 1e-6;
  for (int i = 0; i < d; ++i) {
    StatePair up = a, down = a;
    up.h(i) += h;
    down.h(i) -= h;
    const double fd = (project(tree_cell(up, b, TreeKind::Top, params)) -
                       project(tree_cell(down, b, TreeKind::Top, params))) / (2 * h);
    EXPECT_NEAR(ga.h(i), fd, 1e-7);
    up = a;
    down = a;
    up.c(i) += h;
    down.c(i) -= h;
    const double fdc = (project(tree_cell(up, b, TreeKind::Top, params)) -
                        project(tree_cell(down, b, TreeKind::Top, params))) / (2 * h);
    EXPECT_NEAR(ga.c(i), fdc, 1e-7);
  }
}

TEST_F(CellGradient, HeadMatchesSigmoidDerivative) {
  const StatePair s = random_state(d, rng);
  Tape tape(params);
  const Slot in = tape.input(s);
  const double p = tape.observe(HeadKind::Gate, in, true);
  std::vector<double> g(params.size(), 0.0);
  tape.backward(g);
  // d log sigma(z) / dz = 1 - sigma(z); dz/db = 1, dz/dW = h.
  const auto gb = params.view(std::span<const double>(g), Block::GateB);
  const auto gW = params.view(std::span<const double>(g), Block::GateW);
  EXPECT_NEAR(gb(0, 0), 1.0 - p, 1e-14);
  for (int i = 0; i < d; ++i) EXPECT_NEAR(gW(0, i), (1.0 - p) * s.h(i), 1e-14);
  const auto gs = tape.grad(in);
  for (int i = 0; i < d; ++i) EXPECT_NEAR(gs.h(i), (1.0 - p) * params.mat(Block::GateW)(0, i), 1e-14);
  EXPECT_EQ(gs.c.norm(), 0.0);
}

TEST_F(CellGradient, CompositeOfThreeCells) {
  const BitsCode c1{3, {0}}, c2{5, {2, 4}};
  auto direct = [&] {
    const auto l = bits_embed(to_dense(c1, L), params);
    const auto rr = bits_embed(to_dense(c2, L), params);
    const auto t = tree_cell(l, rr, TreeKind::Bot, params);
    StatePair aug = t;
    aug.h += pos_encode(4, d);
    const auto top = lstm_cell(aug, params.mat(Block::TokLeft).col(0), params, LstmKind::Top);
    return std::log(bernoulli_head(top, HeadKind::Left, params)) + std::log(1.0 - bernoulli_head(t, HeadKind::Right, params));
  };
  Tape tape(params);
  const Slot t = tape.tree_cell(TreeKind::Bot, tape.bits_embed(c1), tape.bits_embed(c2));
  const Slot top = tape.lstm_cell(LstmKind::Top, tape.add_position(t, 4), LstmInput::TokenLeft);
  tape.observe(HeadKind::Left, top, true);
  tape.observe(HeadKind::Right, t, false);
  EXPECT_NEAR(tape.log_prob(), direct(), 1e-13);
  std::vector<double> analytic(params.size(), 0.0);
  tape.backward(analytic);
  EXPECT_LT(rel_diff(analytic, numeric_grad(params, direct)), 1e-4);
}

TEST(Tape, ConstantLossHasZeroGradient) {
  const auto params = init_params(4, 4, 2);
  Tape tape(params);
  const Slot s = tape.tree_cell(TreeKind::Bot, Tape::zero(), Tape::zero());
  (void)s;
  std::vector<double> g(params.size(), 0.0);
  tape.backward(g);
  for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(Tape, BackwardPreconditions) {
  const auto params = init_params(4, 4, 2);
  std::vector<double> g(params.size(), 0.0);
  Tape empty(params);
  EXPECT_THROW(empty.backward(g), std::logic_error);
  Tape once(params);
  once.observe(HeadKind::Gate, once.input(StatePair::zero(4)), true);
  once.backward(g);
  EXPECT_THROW(once.backward(g), std::logic_error);
}

TEST(Tape, BatchedMatchesSingle) {
  const auto params = init_params(4, 4, 8);
  std::mt19937_64 rng(3);
  std::vector<StatePair> xs;
  for (int i = 0; i < 5; ++i) xs.push_back(random_state(4, rng));
  Tape batched(params), single(params);
  std::vector<Slot> bl, br;
  for (int i = 0; i < 4; ++i) {
    bl.push_back(batched.input(xs[static_cast<std::size_t>(i)]));
    br.push_back(batched.input(xs[static_cast<std::size_t>(i + 1)]));
  }
  const auto outs = batched.tree_cell(TreeKind::Row, bl, br);
  const std::vector<std::uint8_t> yes(4, 1);
  batched.observe(HeadKind::Gate, outs, yes);
  double ll = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Slot o = single.tree_cell(TreeKind::Row, single.input(xs[static_cast<std::size_t>(i)]),
                                    single.input(xs[static_cast<std::size_t>(i + 1)]));
    ll += std::log(single.observe(HeadKind::Gate, o, true));
  }
  EXPECT_NEAR(batched.log_prob(), ll, 1e-13);
  std::vector<double> g1(params.size(), 0.0), g2(params.size(), 0.0);
  batched.backward(g1);
  single.backward(g2);
  EXPECT_LT(rel_diff(g1, g2), 1e-12);
  EXPECT_EQ(batched.counter().tree_cells, 4);
}

TEST(Params, InitDeterministicAndScaled) {
  const auto a = init_params(8, 6, 42), b = init_params(8, 6, 42), c = init_params(8, 6, 43);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  const auto W = a.mat(Block::TreeBotW);
  EXPECT_LE(W.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
  EXPECT_EQ(a.mat(Block::TreeBotB).norm(), 0.0);
}

TEST(Params, AdamStep) {
  std::vector<double> theta{0.5}, g{1.0};
  Adam adam(1);
  adam.step(theta, g, AdamHyper{});
  EXPECT_NEAR(theta[0], 0.5 - 1e-3, 1e-9);
  std::vector<double> still{0.5}, zero{0.0};
  Adam idle(1);
  idle.step(still, zero, AdamHyper{});
  EXPECT_EQ(still[0], 0.5);
}

TEST(Params, ClipGradNorm) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(std::hypot(g[0], g[1]), 1.0, 1e-15);
  std::vector<double> small{0.3, 0.4};
  clip_grad_norm(small, 1.0);
  EXPECT_EQ(small[0], 0.3);
}

TEST(Params, CheckpointRoundTripAndValidation) {
  const auto dir = std::filesystem::temp_directory_path() / "bigg_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "p.ckpt";
  const auto p = init_params(6, 5, 4);
  save_checkpoint(p, path);
  EXPECT_TRUE(load_checkpoint(path) == p);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(12);  // d
    const std::uint32_t wrong = 7;
    f.write(reinterpret_cast<const char*>(&wrong), 4);
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPT";
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace bigg
