#include "bigg/edge_tree.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bigg {

std::size_t EdgeTree::internal_count() const {
  std::size_t k = 0;
  for (const auto& n : nodes_) k += n.iv.is_leaf() ? 0 : 1;
  return k;
}

std::vector<NodeId> EdgeTree::leaves() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_)
    if (n.iv.is_leaf()) out.push_back(n.iv.lo);
  return out;  // preorder visits leaves left to right
}

std::vector<std::vector<int>> EdgeTree::depth_groups() const {
  std::vector<std::vector<int>> g;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    const auto dpt = static_cast<std::size_t>(nodes_[static_cast<std::size_t>(i)].depth);
    if (g.size() <= dpt) g.resize(dpt + 1);
    g[dpt].push_back(i);
  }
  return g;
}

std::vector<std::vector<int>> EdgeTree::height_groups() const {
  std::vector<std::vector<int>> g;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    const auto ht = static_cast<std::size_t>(nodes_[static_cast<std::size_t>(i)].height);
    if (g.size() <= ht) g.resize(ht + 1);
    g[ht].push_back(i);
  }
  return g;
}

namespace {

int build_rec(std::vector<TreeNode>& nodes, Interval iv, std::span<const NodeId> cols, int depth) {
  const int idx = static_cast<int>(nodes.size());
  nodes.push_back({iv, -1, -1, depth, 0});
  if (iv.is_leaf()) return idx;
  const auto split = std::upper_bound(cols.begin(), cols.end(), iv.mid());
  const auto nl = static_cast<std::size_t>(split - cols.begin());
  int height = 0;
  if (nl > 0) {
    const int c = build_rec(nodes, iv.left(), cols.first(nl), depth + 1);
    nodes[static_cast<std::size_t>(idx)].left = c;
    height = std::max(height, nodes[static_cast<std::size_t>(c)].height + 1);
  }
  if (nl < cols.size()) {
    const int c = build_rec(nodes, iv.right(), cols.subspan(nl), depth + 1);
    nodes[static_cast<std::size_t>(idx)].right = c;
    height = std::max(height, nodes[static_cast<std::size_t>(c)].height + 1);
  }
  nodes[static_cast<std::size_t>(idx)].height = height;
  return idx;
}

void check_row(std::span<const NodeId> cols, Interval span) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] < span.lo || cols[i] > span.hi)
      throw std::invalid_argument("column " + std::to_string(cols[i]) + " outside [" + std::to_string(span.lo) +
                                  ", " + std::to_string(span.hi) + "]");
    if (i > 0 && cols[i] <= cols[i - 1]) throw std::invalid_argument("columns must be strictly increasing");
  }
}

}  // namespace

EdgeTree build_tree(std::span<const NodeId> neighbors, Interval span) {
  if (neighbors.empty()) throw std::invalid_argument("build_tree: empty row");
  if (span.lo > span.hi) throw std::invalid_argument("build_tree: empty interval");
  check_row(neighbors, span);
  std::vector<TreeNode> nodes;
  build_rec(nodes, span, neighbors, 0);
  return EdgeTree(std::move(nodes));
}

BitsCode slice_code(Interval iv, std::span<const NodeId> cols_in_iv) {
  BitsCode code;
  code.length = iv.length();
  code.ones.reserve(cols_in_iv.size());
  for (NodeId c : cols_in_iv) code.ones.push_back(c - iv.lo);
  return code;
}

BottomUpResult bottom_up(const EdgeTree& tree, const ParamStore& params) {
  BottomUpResult out;
  const int d = params.d();
  out.root = StatePair::zero(d);
  if (tree.empty()) return out;
  const auto& nodes = tree.nodes();
  out.hbot.assign(nodes.size(), StatePair::zero(d));
  std::vector<NodeId> leaves = tree.leaves();
  const int L = params.bits_length();
  BitsTable table(params);
  // Preorder: children follow parents, so a reverse sweep is bottom-up.
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& n = nodes[i];
    if (n.iv.length() <= L) {
      auto lo = std::lower_bound(leaves.begin(), leaves.end(), n.iv.lo);
      auto hi = std::upper_bound(leaves.begin(), leaves.end(), n.iv.hi);
      const Vector v = table.embed(slice_code(n.iv, std::span<const NodeId>(leaves).subspan(static_cast<std::size_t>(lo - leaves.begin()), static_cast<std::size_t>(hi - lo))));
      out.hbot[i] = {v.head(d), v.tail(d)};
      ++out.counter.bits_embeds;
    } else {
      const StatePair zero = StatePair::zero(d);
      const StatePair& l = n.has_left() ? out.hbot[static_cast<std::size_t>(n.left)] : zero;
      const StatePair& r = n.has_right() ? out.hbot[static_cast<std::size_t>(n.right)] : zero;
      out.hbot[i] = tree_cell(l, r, TreeKind::Bot, params);
      ++out.counter.tree_cells;
    }
  }
  out.root = out.hbot.front();
  return out;
}

double TraceEntry::log_prob() const {
  if (forced) return 0.0;
  return outcome ? log_sigmoid(logit) : log_sigmoid(-logit);
}

double RowTrace::log_prob() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.log_prob();
  return s;
}

RowLikelihood row_log_likelihood(NodeId u, std::span<const NodeId> neighbors, const StatePair& h_row_prev,
                                 const ParamStore& params, const ModelOptions& opts, OpCounter* counter) {
  if (u < 1) throw std::invalid_argument("row index must be >= 1");
  if (!neighbors.empty()) check_row(neighbors, Interval{1, u - 1});
  DirectExec ex(params, opts, counter);
  RowLikelihood out{0.0, {}, StatePair::zero(params.d())};
  auto res = score_row(ex, u, neighbors, h_row_prev, opts, &out.trace);
  out.log_prob = out.trace.log_prob();
  out.g = std::move(res.g);
  return out;
}

SampledRow sample_row(NodeId u, const StatePair& h_row_prev, const ParamStore& params, std::mt19937_64& rng,
                      Decode decode, const ModelOptions& opts, OpCounter* counter) {
  if (u < 1) throw std::invalid_argument("row index must be >= 1");
  DirectExec ex(params, opts, counter);
  SampledRow out;
  auto res = generate_row(ex, u, h_row_prev, rng, decode, opts, &out.trace);
  out.neighbors = std::move(res.neighbors);
  out.g = std::move(res.g);
  return out;
}

}  // namespace bigg
