#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bigg/exec.hpp"
#include "bigg/graph.hpp"

namespace bigg {

/// Closed column interval [lo, hi]; children split at floor((lo + hi) / 2).
struct Interval {
  NodeId lo = 1;
  NodeId hi = 1;

  NodeId mid() const { return lo + (hi - lo) / 2; }
  NodeId length() const { return hi - lo + 1; }
  bool is_leaf() const { return lo == hi; }
  Interval left() const { return {lo, mid()}; }
  Interval right() const { return {mid() + 1, hi}; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct TreeNode {
  Interval iv;
  int left = -1;   // child index or -1
  int right = -1;
  int depth = 0;   // root = 0
  int height = 0;  // leaves = 0

  bool has_left() const { return left >= 0; }
  bool has_right() const { return right >= 0; }
};

/// Edge-binary tree of one adjacency row. Nodes are stored in preorder, so
/// nodes[0] is the root and a parent always precedes its children.
class EdgeTree {
 public:
  EdgeTree() = default;
  explicit EdgeTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const TreeNode& root() const { return nodes_.front(); }
  int height() const { return nodes_.empty() ? -1 : nodes_.front().height; }
  std::size_t internal_count() const;

  /// Leaf columns, left to right.
  std::vector<NodeId> leaves() const;
  /// Node indices grouped by depth from the root.
  std::vector<std::vector<int>> depth_groups() const;
  /// Node indices grouped by height above the leaves.
  std::vector<std::vector<int>> height_groups() const;

 private:
  std::vector<TreeNode> nodes_;
};

/// Minimal tree whose leaves are exactly the given sorted columns. Throws
/// std::invalid_argument for an empty list or a column outside `span`.
EdgeTree build_tree(std::span<const NodeId> neighbors, Interval span);

/// Ternary-code input for an interval given the sorted columns inside it.
BitsCode slice_code(Interval iv, std::span<const NodeId> cols_in_iv);

struct BottomUpResult {
  std::vector<StatePair> hbot;  // per tree node
  StatePair root;
  OpCounter counter;
};

/// h_bot for every node: bits_embed for intervals no longer than L, the
/// bottom TreeLSTM over (left, right) otherwise, absent children being zero.
BottomUpResult bottom_up(const EdgeTree& tree, const ParamStore& params);

enum class SiteKind { Gate, Left, Right };

struct TraceEntry {
  SiteKind site;
  Interval iv;
  double logit;  // +inf for forced entries
  double prob;   // probability of "true"
  bool outcome;
  bool forced;

  double log_prob() const;
};

struct RowTrace {
  std::vector<TraceEntry> entries;
  /// Sum of log p(outcome) over non-forced entries.
  double log_prob() const;
};

/// Per-decision mixing: with probability eps draw from the Bernoulli,
/// otherwise take the more likely branch. eps = 1 is ancestral sampling and
/// eps = 0 greedy decoding.
struct Decode {
  double eps = 1.0;

  static Decode sample() { return {1.0}; }
  static Decode greedy() { return {0.0}; }
  static Decode mixed(double e) { return {e}; }
};

template <class Handle>
struct RowResult {
  std::vector<NodeId> neighbors;
  Handle g;  // summary of the row tree; zero for empty rows
};

namespace detail {

/// Outcomes are read from a known neighbour list.
struct DataDecider {
  std::span<const NodeId> neighbors;

  bool any_in(Interval iv) const {
    auto it = std::lower_bound(neighbors.begin(), neighbors.end(), iv.lo);
    return it != neighbors.end() && *it <= iv.hi;
  }
  bool operator()(SiteKind site, Interval iv, double) const {
    switch (site) {
      case SiteKind::Gate: return !neighbors.empty();
      case SiteKind::Left: return any_in(iv.left());
      case SiteKind::Right: return any_in(iv.right());
    }
    return false;
  }
};

struct RngDecider {
  std::mt19937_64* rng;
  Decode decode;

  bool operator()(SiteKind, Interval, double logit) const {
    const double p = sigmoid(logit);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (decode.eps >= 1.0 || (decode.eps > 0.0 && unif(*rng) < decode.eps)) return unif(*rng) < p;
    return logit >= 0.0;
  }
};

/// Recursive generation / scoring of one row, in-order as in the row
/// generation algorithm, with lazily materialised bit codes for short
/// intervals.
template <class Exec, class Decider>
class RowWalker {
 public:
  using Handle = typename Exec::Handle;

  RowWalker(Exec& ex, const ModelOptions& opts, Decider& decide, RowTrace* trace)
      : ex_(ex), opts_(opts), decide_(decide), trace_(trace), L_(ex.params().bits_length()) {}

  RowResult<Handle> run(NodeId u, const Handle& h_row_prev) {
    RowResult<Handle> out{{}, ex_.zero()};
    edges_.clear();
    if (u <= 1) return out;
    const Interval span{1, u - 1};
    if (!decide_site(HeadKind::Gate, SiteKind::Gate, span, h_row_prev)) return out;
    Lazy root = visit(span, h_row_prev);
    out.g = materialize(root);
    out.neighbors = edges_;
    return out;
  }

 private:
  struct Lazy {
    std::optional<Handle> h;
    Interval iv;
    std::size_t first = 0, last = 0;  // range in edges_
  };

  bool decide_site(HeadKind head, SiteKind site, Interval iv, const Handle& state) {
    const double z = ex_.logit(head, state);
    const bool outcome = decide_(site, iv, z);
    ex_.observe(head, state, outcome);
    if (trace_) trace_->entries.push_back({site, iv, z, sigmoid(z), outcome, false});
    return outcome;
  }

  Handle materialize(Lazy& z) {
    if (!z.h) {
      z.h = ex_.bits(slice_code(z.iv, std::span<const NodeId>(edges_).subspan(z.first, z.last - z.first)));
    }
    return *z.h;
  }

  Lazy visit(Interval iv, const Handle& top) {
    Lazy self{std::nullopt, iv, edges_.size(), edges_.size()};
    if (iv.is_leaf()) {
      edges_.push_back(iv.lo);
      self.last = edges_.size();
      return self;
    }
    const Interval li = iv.left(), ri = iv.right();
    const Handle aug = ex_.add_position(top, iv.hi - iv.lo);
    const bool has_left = decide_site(HeadKind::Left, SiteKind::Left, iv, aug);
    const Handle top_l = ex_.lstm_token(LstmKind::Top, aug, false);
    std::optional<Lazy> left;
    Handle bot_l = ex_.zero();
    if (has_left) {
      left = visit(li, top_l);
      bot_l = materialize(*left);
    }
    const Handle hat = ex_.tree(TreeKind::Top, bot_l, top_l);
    const Handle aug_hat = ex_.add_position(hat, ri.hi - ri.lo);
    bool has_right = true;
    if (has_left || !opts_.force_children) {
      has_right = decide_site(HeadKind::Right, SiteKind::Right, iv, aug_hat);
    } else if (trace_) {
      trace_->entries.push_back({SiteKind::Right, iv, INFINITY, 1.0, true, true});
    }
    std::optional<Lazy> right;
    if (has_right) right = visit(ri, ex_.lstm_token(LstmKind::Top, aug_hat, true));
    self.last = edges_.size();
    if (iv.length() > L_) {
      const Handle r = right ? materialize(*right) : ex_.zero();
      self.h = ex_.tree(TreeKind::Bot, bot_l, r);
    }
    return self;
  }

  Exec& ex_;
  const ModelOptions& opts_;
  Decider& decide_;
  RowTrace* trace_;
  int L_;
  std::vector<NodeId> edges_;
};

}  // namespace detail

/// Scores row u given its (sorted, all < u) neighbours. Returns the row
/// summary g_u^0 alongside.
template <class Exec>
RowResult<typename Exec::Handle> score_row(Exec& ex, NodeId u, std::span<const NodeId> neighbors,
                                           const typename Exec::Handle& h_row_prev,
                                           const ModelOptions& opts, RowTrace* trace = nullptr) {
  detail::DataDecider decide{neighbors};
  detail::RowWalker<Exec, detail::DataDecider> walker(ex, opts, decide, trace);
  return walker.run(u, h_row_prev);
}

template <class Exec>
RowResult<typename Exec::Handle> generate_row(Exec& ex, NodeId u, const typename Exec::Handle& h_row_prev,
                                              std::mt19937_64& rng, Decode decode,
                                              const ModelOptions& opts, RowTrace* trace = nullptr) {
  detail::RngDecider decide{&rng, decode};
  detail::RowWalker<Exec, detail::RngDecider> walker(ex, opts, decide, trace);
  return walker.run(u, h_row_prev);
}

/// Summary of the bottom-up pass only (no decisions): g_u^0 of a known row.
template <class Exec>
typename Exec::Handle row_summary(Exec& ex, NodeId u, std::span<const NodeId> neighbors) {
  if (u <= 1 || neighbors.empty()) return ex.zero();
  const int L = ex.params().bits_length();
  auto rec = [&](auto&& self, Interval iv, std::span<const NodeId> cols) -> typename Exec::Handle {
    if (cols.empty()) return ex.zero();
    if (iv.length() <= L) return ex.bits(slice_code(iv, cols));
    const auto split = std::upper_bound(cols.begin(), cols.end(), iv.mid());
    const auto nl = static_cast<std::size_t>(split - cols.begin());
    auto l = self(self, iv.left(), cols.first(nl));
    auto r = self(self, iv.right(), cols.subspan(nl));
    return ex.tree(TreeKind::Bot, l, r);
  };
  return rec(rec, Interval{1, u - 1}, neighbors);
}

struct RowLikelihood {
  double log_prob;
  RowTrace trace;
  StatePair g;
};

/// Throws std::invalid_argument when a neighbour lies outside [1, u - 1] or
/// the list is not strictly increasing.
RowLikelihood row_log_likelihood(NodeId u, std::span<const NodeId> neighbors, const StatePair& h_row_prev,
                                 const ParamStore& params, const ModelOptions& opts = {},
                                 OpCounter* counter = nullptr);

struct SampledRow {
  std::vector<NodeId> neighbors;
  RowTrace trace;
  StatePair g;
};

SampledRow sample_row(NodeId u, const StatePair& h_row_prev, const ParamStore& params, std::mt19937_64& rng,
                      Decode decode = Decode::sample(), const ModelOptions& opts = {},
                      OpCounter* counter = nullptr);

}  // namespace bigg
