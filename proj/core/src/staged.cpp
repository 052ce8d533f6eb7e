#include "bigg/staged.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

#include "bigg/row_forest.hpp"

namespace bigg {

std::size_t StagePlan::max_barriers() const { return *std::max_element(barriers.begin(), barriers.end()); }

namespace {

struct RowTree {
  NodeId u = 0;
  EdgeTree tree;
  std::vector<NodeId> leaves;
  std::vector<int> parent;
  std::vector<char> needed;  // h_bot is consumed somewhere
  std::vector<int> level;    // bottom-up compute level, -1 if not needed
};

std::vector<RowTree> build_rows(const Graph& g, int L) {
  std::vector<RowTree> rows;
  for (NodeId u = 2; u <= g.num_nodes(); ++u) {
    if (g.row(u).empty()) continue;
    RowTree rt;
    rt.u = u;
    rt.tree = build_tree(g.row(u), Interval{1, u - 1});
    rt.leaves.assign(g.row(u).begin(), g.row(u).end());
    const auto& nodes = rt.tree.nodes();
    const std::size_t N = nodes.size();
    rt.parent.assign(N, -1);
    for (std::size_t i = 0; i < N; ++i) {
      if (nodes[i].has_left()) rt.parent[static_cast<std::size_t>(nodes[i].left)] = static_cast<int>(i);
      if (nodes[i].has_right()) rt.parent[static_cast<std::size_t>(nodes[i].right)] = static_cast<int>(i);
    }
    rt.needed.assign(N, 0);
    rt.level.assign(N, -1);
    for (std::size_t i = 0; i < N; ++i) {
      const int p = rt.parent[i];
      const bool is_left = p >= 0 && nodes[static_cast<std::size_t>(p)].left == static_cast<int>(i);
      rt.needed[i] = p < 0 || is_left || nodes[static_cast<std::size_t>(p)].iv.length() > L;
    }
    for (std::size_t i = N; i-- > 0;) {
      if (!rt.needed[i]) continue;
      if (nodes[i].iv.length() <= L) {
        rt.level[i] = 0;
        continue;
      }
      int lv = 0;
      if (nodes[i].has_left()) lv = std::max(lv, rt.level[static_cast<std::size_t>(nodes[i].left)]);
      if (nodes[i].has_right()) lv = std::max(lv, rt.level[static_cast<std::size_t>(nodes[i].right)]);
      rt.level[i] = lv + 1;
    }
    rows.push_back(std::move(rt));
  }
  return rows;
}

BitsCode node_code(const RowTree& rt, Interval iv) {
  auto lo = std::lower_bound(rt.leaves.begin(), rt.leaves.end(), iv.lo);
  auto hi = std::upper_bound(rt.leaves.begin(), rt.leaves.end(), iv.hi);
  return slice_code(iv, std::span<const NodeId>(rt.leaves).subspan(static_cast<std::size_t>(lo - rt.leaves.begin()),
                                                                   static_cast<std::size_t>(hi - lo)));
}

struct NodeRef {
  std::size_t row;  // index into rows
  int node;
};

}  // namespace

StagePlan plan_stages(const Graph& g, int bits_length) {
  if (!g.undirected()) throw std::invalid_argument("only undirected graphs are supported");
  StagePlan plan;
  const NodeId n = g.num_nodes();
  const auto rows = build_rows(g, bits_length);
  int max_level = -1;
  int max_depth = -1;
  for (const auto& rt : rows) {
    for (std::size_t i = 0; i < rt.tree.size(); ++i) {
      if (rt.level[i] >= 0) {
        max_level = std::max(max_level, rt.level[i]);
        ++plan.cells[0];
      }
      const auto& nd = rt.tree.nodes()[i];
      if (!nd.iv.is_leaf()) {
        max_depth = std::max(max_depth, nd.depth);
        plan.cells[3] += 2 + (nd.has_right() ? 1 : 0);
      }
    }
  }
  plan.barriers[0] = static_cast<std::size_t>(max_level + 1);
  const NodeId folded = std::max<NodeId>(n - 1, 0);
  for (int i = 1; (NodeId{1} << i) <= folded; ++i) {
    ++plan.barriers[1];
    plan.cells[1] += static_cast<std::size_t>(folded >> i);
  }
  std::size_t max_pop = 0;
  for (NodeId u = 1; u <= folded; ++u) {
    const auto pc = static_cast<std::size_t>(std::popcount(static_cast<std::uint32_t>(u)));
    max_pop = std::max(max_pop, pc);
    plan.cells[2] += pc;
  }
  plan.barriers[2] = n >= 2 ? max_pop + 1 : 0;
  plan.barriers[3] = static_cast<std::size_t>(max_depth + 1);
  return plan;
}

StagedResult staged_log_likelihood(const Graph& g, const ParamStore& params, const ModelOptions& opts,
                                   std::span<double> grad_out, double scale) {
  if (!g.undirected()) throw std::invalid_argument("only undirected graphs are supported");
  StagedResult out;
  out.plan = plan_stages(g, params.bits_length());
  const NodeId n = g.num_nodes();
  const int L = params.bits_length();
  auto rows = build_rows(g, L);
  Tape tape(params, opts.share_lstm);

  // Stage 1: h_bot for every needed tree node, level by level.
  std::vector<std::vector<Slot>> hbot(rows.size());
  std::vector<std::vector<NodeRef>> by_level;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    hbot[r].assign(rows[r].tree.size(), Tape::zero());
    for (std::size_t i = 0; i < rows[r].tree.size(); ++i) {
      const int lv = rows[r].level[i];
      if (lv < 0) continue;
      if (by_level.size() <= static_cast<std::size_t>(lv)) by_level.resize(static_cast<std::size_t>(lv) + 1);
      by_level[static_cast<std::size_t>(lv)].push_back({r, static_cast<int>(i)});
    }
  }
  for (std::size_t lv = 0; lv < by_level.size(); ++lv) {
    const auto& refs = by_level[lv];
    std::vector<Slot> res;
    if (lv == 0) {
      std::vector<BitsCode> codes;
      codes.reserve(refs.size());
      for (const auto& ref : refs) codes.push_back(node_code(rows[ref.row], rows[ref.row].tree.nodes()[static_cast<std::size_t>(ref.node)].iv));
      res = tape.bits_embed(codes);
    } else {
      std::vector<Slot> ls, rs;
      for (const auto& ref : refs) {
        const auto& nd = rows[ref.row].tree.nodes()[static_cast<std::size_t>(ref.node)];
        ls.push_back(nd.has_left() ? hbot[ref.row][static_cast<std::size_t>(nd.left)] : Tape::zero());
        rs.push_back(nd.has_right() ? hbot[ref.row][static_cast<std::size_t>(nd.right)] : Tape::zero());
      }
      res = tape.tree_cell(TreeKind::Bot, ls, rs);
    }
    for (std::size_t k = 0; k < refs.size(); ++k) hbot[refs[k].row][static_cast<std::size_t>(refs[k].node)] = res[k];
  }

  // Row summaries g_u^0 for u = 1..n-1 (zero for empty rows).
  const NodeId folded = std::max<NodeId>(n - 1, 0);
  std::vector<Slot> g0(static_cast<std::size_t>(folded), Tape::zero());
  std::vector<std::ptrdiff_t> row_index(static_cast<std::size_t>(n) + 1, -1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    row_index[static_cast<std::size_t>(rows[r].u)] = static_cast<std::ptrdiff_t>(r);
    if (rows[r].u <= folded) g0[static_cast<std::size_t>(rows[r].u - 1)] = hbot[r][0];
  }

  // Stage 2: forest entries, level by level.
  std::vector<std::vector<Slot>> forest{g0};
  for (int i = 1; (NodeId{1} << i) <= folded; ++i) {
    const auto& prev = forest.back();
    std::vector<Slot> ls, rs;
    for (std::size_t j = 0; 2 * j + 1 < prev.size(); ++j) {
      ls.push_back(prev[2 * j]);
      rs.push_back(prev[2 * j + 1]);
    }
    forest.push_back(tape.tree_cell(TreeKind::Row, ls, rs));
  }

  // Stage 3: h_row_u for u = 1..n-1, batched by LSTM step, then the gates.
  std::vector<Slot> hrow(static_cast<std::size_t>(n), Tape::zero());  // index u, h_row_0 = 0
  if (folded > 0) {
    std::vector<std::vector<ForestKey>> keys(static_cast<std::size_t>(folded) + 1);
    std::size_t steps = 0;
    for (NodeId u = 1; u <= folded; ++u) {
      keys[static_cast<std::size_t>(u)] = forest_root_keys(u);
      steps = std::max(steps, keys[static_cast<std::size_t>(u)].size());
    }
    std::vector<Slot> state(static_cast<std::size_t>(folded) + 1, Tape::zero());
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<Slot> prev, x;
      std::vector<NodeId> who;
      for (NodeId u = 1; u <= folded; ++u) {
        const auto& ks = keys[static_cast<std::size_t>(u)];
        if (t >= ks.size()) continue;
        prev.push_back(state[static_cast<std::size_t>(u)]);
        x.push_back(forest[static_cast<std::size_t>(ks[t].level)][ks[t].index]);
        who.push_back(u);
      }
      const auto res = tape.lstm_cell(LstmKind::Seq, prev, LstmInput::SlotHidden, x);
      for (std::size_t k = 0; k < who.size(); ++k) state[static_cast<std::size_t>(who[k])] = res[k];
    }
    std::vector<Slot> in(state.begin() + 1, state.end());
    std::vector<std::int64_t> offs;
    for (NodeId u = 1; u <= folded; ++u) offs.push_back(n - u);
    const auto res = tape.add_position(in, offs);
    std::copy(res.begin(), res.end(), hrow.begin() + 1);
  }
  {
    std::vector<Slot> states;
    std::vector<std::uint8_t> outcomes;
    for (NodeId u = 2; u <= n; ++u) {
      states.push_back(hrow[static_cast<std::size_t>(u - 1)]);
      outcomes.push_back(row_index[static_cast<std::size_t>(u)] >= 0 ? 1 : 0);
    }
    tape.observe(HeadKind::Gate, states, outcomes);
  }

  // Stage 4: top-down decisions, depth by depth.
  std::vector<std::vector<Slot>> top(rows.size());
  std::vector<NodeRef> cur;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    top[r].assign(rows[r].tree.size(), Tape::zero());
    top[r][0] = hrow[static_cast<std::size_t>(rows[r].u - 1)];
    if (!rows[r].tree.root().iv.is_leaf()) cur.push_back({r, 0});
  }
  while (!cur.empty()) {
    auto node_of = [&](const NodeRef& ref) -> const TreeNode& {
      return rows[ref.row].tree.nodes()[static_cast<std::size_t>(ref.node)];
    };
    std::vector<Slot> tops, bl;
    std::vector<std::int64_t> off_l, off_r;
    std::vector<std::uint8_t> has_l;
    for (const auto& ref : cur) {
      const auto& nd = node_of(ref);
      tops.push_back(top[ref.row][static_cast<std::size_t>(ref.node)]);
      off_l.push_back(nd.iv.hi - nd.iv.lo);
      off_r.push_back(nd.iv.right().hi - nd.iv.right().lo);
      has_l.push_back(nd.has_left() ? 1 : 0);
      bl.push_back(nd.has_left() ? hbot[ref.row][static_cast<std::size_t>(nd.left)] : Tape::zero());
    }
    const auto aug = tape.add_position(tops, off_l);
    tape.observe(HeadKind::Left, aug, has_l);
    const auto top_l = tape.lstm_cell(LstmKind::Top, aug, LstmInput::TokenLeft);
    const auto hat = tape.tree_cell(TreeKind::Top, bl, top_l);
    const auto aug_hat = tape.add_position(hat, off_r);
    std::vector<Slot> obs_states, right_states;
    std::vector<std::uint8_t> obs_out;
    std::vector<NodeRef> right_refs;
    for (std::size_t k = 0; k < cur.size(); ++k) {
      const auto& nd = node_of(cur[k]);
      if (nd.has_left() || !opts.force_children) {
        obs_states.push_back(aug_hat[k]);
        obs_out.push_back(nd.has_right() ? 1 : 0);
      }
      if (nd.has_right()) {
        right_states.push_back(aug_hat[k]);
        right_refs.push_back(cur[k]);
      }
    }
    tape.observe(HeadKind::Right, obs_states, obs_out);
    const auto top_r = tape.lstm_cell(LstmKind::Top, right_states, LstmInput::TokenRight);

    std::vector<NodeRef> next;
    for (std::size_t k = 0; k < cur.size(); ++k) {
      const auto& nd = node_of(cur[k]);
      if (!nd.has_left()) continue;
      top[cur[k].row][static_cast<std::size_t>(nd.left)] = top_l[k];
      if (!node_of({cur[k].row, nd.left}).iv.is_leaf()) next.push_back({cur[k].row, nd.left});
    }
    for (std::size_t k = 0; k < right_refs.size(); ++k) {
      const auto& nd = node_of(right_refs[k]);
      top[right_refs[k].row][static_cast<std::size_t>(nd.right)] = top_r[k];
      if (!node_of({right_refs[k].row, nd.right}).iv.is_leaf()) next.push_back({right_refs[k].row, nd.right});
    }
    cur = std::move(next);
  }

  out.log_prob = tape.log_prob();
  out.counter = tape.counter();
  if (!grad_out.empty() && !tape.empty()) tape.backward(grad_out, scale);
  return out;
}

}  // namespace bigg
