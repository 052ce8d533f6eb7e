#include "bigg/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace bigg {

namespace {

constexpr std::array<std::string_view, kNumBlocks> kNames = {
    "tree_bot.W", "tree_bot.b", "tree_top.W", "tree_top.b", "tree_row.W", "tree_row.b",
    "lstm_top.W", "lstm_top.b", "seq_cell.W", "seq_cell.b", "head_left.W", "head_left.b",
    "head_right.W", "head_right.b", "row_gate.W", "row_gate.b", "tok_left", "tok_right",
    "bits_map.W", "bits_map.b"};

std::array<BlockInfo, kNumBlocks> layout(int d, int L) {
  const Eigen::Index D = d, B = L;
  const std::array<std::pair<Eigen::Index, Eigen::Index>, kNumBlocks> shapes = {{
      {5 * D, 2 * D}, {5 * D, 1}, {5 * D, 2 * D}, {5 * D, 1}, {5 * D, 2 * D}, {5 * D, 1},
      {4 * D, 2 * D}, {4 * D, 1}, {4 * D, 2 * D}, {4 * D, 1},
      {1, D}, {1, 1}, {1, D}, {1, 1}, {1, D}, {1, 1},
      {D, 1}, {D, 1},
      {2 * D, B}, {2 * D, 1},
  }};
  std::array<BlockInfo, kNumBlocks> out{};
  std::size_t offset = 0;
  for (std::size_t i = 0; i < kNumBlocks; ++i) {
    out[i] = BlockInfo{kNames[i], shapes[i].first, shapes[i].second, offset};
    offset += out[i].size();
  }
  return out;
}

}  // namespace

ParamStore::ParamStore(int d, int bits_length) : d_(d), bits_length_(bits_length) {
  if (d < 1 || bits_length < 1) throw std::invalid_argument("d and L must be positive");
  blocks_ = layout(d, bits_length);
  const auto& last = blocks_.back();
  values_.assign(last.offset + last.size(), 0.0);
  grads_.assign(values_.size(), 0.0);
}

void ParamStore::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

MatrixMap ParamStore::view(std::span<double> flat, Block b) const {
  const auto& i = info(b);
  return MatrixMap(flat.data() + i.offset, i.rows, i.cols);
}

ConstMatrixMap ParamStore::view(std::span<const double> flat, Block b) const {
  const auto& i = info(b);
  return ConstMatrixMap(flat.data() + i.offset, i.rows, i.cols);
}

void ParamStore::init_uniform(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& b : blocks_) {
    auto* p = values_.data() + b.offset;
    const bool bias = b.name.ends_with(".b");
    if (bias) {
      std::fill(p, p + b.size(), 0.0);
      continue;
    }
    // Token embeddings are column vectors with no fan-in; scale by d instead.
    const double fan_in = b.name.starts_with("tok_") ? static_cast<double>(b.rows) : static_cast<double>(b.cols);
    std::uniform_real_distribution<double> unif(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (std::size_t k = 0; k < b.size(); ++k) p[k] = unif(rng);
  }
  zero_grad();
}

ParamStore init_params(int d, int bits_length, std::uint64_t seed) {
  ParamStore p(d, bits_length);
  p.init_uniform(seed);
  return p;
}

Adam::Adam(std::size_t size) : m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> values, std::span<const double> grads, const AdamHyper& h) {
  if (values.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("adam buffer size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < values.size(); ++i) {
    m_[i] = h.beta1 * m_[i] + (1.0 - h.beta1) * grads[i];
    v_[i] = h.beta2 * v_[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    values[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

namespace {

constexpr char kMagic[8] = {'B', 'I', 'G', 'G', 'C', 'K', 'P', 'T'};

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.d()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.bits_length()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(kNumBlocks));
  for (const auto& b : params.blocks()) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.name.size()));
    os.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.rows));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.cols));
    const double* p = params.values().data() + b.offset;
    for (std::size_t k = 0; k < b.size(); ++k) put_le<double>(os, p[k]);
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error(path.string() + ": not a checkpoint file");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto d = get_le<std::uint32_t>(is);
  const auto L = get_le<std::uint32_t>(is);
  const auto count = get_le<std::uint32_t>(is);
  if (d == 0 || L == 0 || d > (1u << 16) || L > (1u << 20))
    throw std::runtime_error(path.string() + ": implausible dimensions in header");
  ParamStore params(static_cast<int>(d), static_cast<int>(L));
  if (count != kNumBlocks) throw std::runtime_error(path.string() + ": unexpected block count");
  for (const auto& b : params.blocks()) {
    const auto len = get_le<std::uint32_t>(is);
    if (len > 256) throw std::runtime_error(path.string() + ": corrupt block name");
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto rows = get_le<std::uint32_t>(is);
    const auto cols = get_le<std::uint32_t>(is);
    if (name != b.name || rows != static_cast<std::uint32_t>(b.rows) || cols != static_cast<std::uint32_t>(b.cols))
      throw std::runtime_error(path.string() + ": block '" + name + "' shape " + std::to_string(rows) + "x" +
                               std::to_string(cols) + " does not match header (d=" + std::to_string(d) +
                               ", L=" + std::to_string(L) + ")");
    double* p = params.values().data() + b.offset;
    for (std::size_t k = 0; k < b.size(); ++k) p[k] = get_le<double>(is);
  }
  return params;
}

}  // namespace bigg
