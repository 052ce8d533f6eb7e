#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "bigg/exec.hpp"
#include "bigg/graph.hpp"

namespace bigg {

/// Position of a forest entry: level i, 0-based index j. The entry covers
/// rows j * 2^i + 1 .. (j + 1) * 2^i.
struct ForestKey {
  int level = 0;
  std::size_t index = 0;
  friend bool operator==(const ForestKey&, const ForestKey&) = default;
  friend auto operator<=>(const ForestKey&, const ForestKey&) = default;
};

/// Keys of the popcount(u) roots covering rows 1..u, highest level first.
inline std::vector<ForestKey> forest_root_keys(NodeId u) {
  std::vector<ForestKey> keys;
  const auto uu = static_cast<std::uint64_t>(u);
  for (int i = 62; i >= 0; --i) {
    if ((uu >> i) & 1U) keys.push_back({i, static_cast<std::size_t>((uu >> i) - 1)});
  }
  return keys;
}

/// Row-binary (Fenwick-style) forest of row summaries. After u updates level
/// i holds floor(u / 2^i) entries.
template <class H>
class BasicRowForest {
 public:
  NodeId size() const { return count_; }
  const std::vector<std::vector<H>>& levels() const { return levels_; }
  const H& at(ForestKey k) const { return levels_[static_cast<std::size_t>(k.level)][k.index]; }

  /// Appends g_u^0 and performs the carries. Returns the number of entries
  /// created (1 + trailing zeros of u).
  template <class Exec>
  std::size_t update(Exec& ex, H g) {
    ++count_;
    std::size_t touched = 1;
    if (levels_.empty()) levels_.emplace_back();
    levels_[0].push_back(std::move(g));
    for (std::size_t i = 0; levels_[i].size() % 2 == 0; ++i) {
      const std::size_t n = levels_[i].size();
      H merged = ex.tree(TreeKind::Row, levels_[i][n - 2], levels_[i][n - 1]);
      if (levels_.size() <= i + 1) levels_.emplace_back();
      levels_[i + 1].push_back(std::move(merged));
      ++touched;
    }
    return touched;
  }

  /// Restores the prefix for `u` rows from the roots that cover it, which is
  /// all a later update or query needs. Used to restart at a chunk boundary.
  void reset_to_roots(NodeId u, const std::vector<std::pair<ForestKey, H>>& roots) {
    levels_.clear();
    count_ = u;
    const auto uu = static_cast<std::uint64_t>(u);
    for (int i = 0; (uu >> i) > 0; ++i) levels_.emplace_back(static_cast<std::size_t>(uu >> i), H{});
    for (const auto& [k, h] : roots) levels_.at(static_cast<std::size_t>(k.level)).at(k.index) = h;
  }

  std::vector<H> roots() const {
    std::vector<H> out;
    for (const auto& k : forest_root_keys(count_)) out.push_back(at(k));
    return out;
  }

  /// h^row_u: the roots fed highest level first through the summary LSTM from
  /// a zero state, then the position encoding of n - u added to h. Zero when
  /// no row has been added.
  template <class Exec>
  H summary(Exec& ex, NodeId n, std::size_t* touched = nullptr) const {
    if (count_ == 0) return ex.zero();
    H state = ex.zero();
    std::size_t t = 0;
    for (const auto& k : forest_root_keys(count_)) {
      state = ex.lstm_state(LstmKind::Seq, state, at(k));
      ++t;
    }
    if (touched) *touched = t;
    return ex.add_position(state, n - count_);
  }

 private:
  std::vector<std::vector<H>> levels_;
  NodeId count_ = 0;
};

using RowForest = BasicRowForest<StatePair>;

/// Convenience wrappers evaluating directly. Both return the number of
/// forest entries touched.
std::size_t forest_update(RowForest& forest, const StatePair& g, const ParamStore& params,
                          const ModelOptions& opts = {});
/// Throws std::invalid_argument when `u` differs from the number of rows
/// absorbed.
StatePair forest_summary(const RowForest& forest, NodeId u, NodeId n, const ParamStore& params,
                         const ModelOptions& opts = {}, std::size_t* touched = nullptr);

}  // namespace bigg
