#include "bigg/chunked.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "bigg/row_forest.hpp"

namespace bigg {

std::size_t choose_k(NodeId n, std::size_t m) {
  if (n < 2) return 1;
  const double k = std::round(std::sqrt(static_cast<double>(m) / std::log2(static_cast<double>(n))));
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, static_cast<std::size_t>(n));
}

namespace {

using Roots = std::vector<std::pair<ForestKey, StatePair>>;

/// Row that completes forest entry (level, j).
NodeId creating_row(ForestKey k) { return static_cast<NodeId>((k.index + 1) << k.level); }

void add_to(StatePair& acc, const StatePair& g) {
  acc.h += g.h;
  acc.c += g.c;
}

}  // namespace

ChunkedReport chunked_backprop(const Graph& g, const ParamStore& params, const ModelOptions& opts, std::size_t k,
                               std::span<double> grad_out, double scale) {
  if (!g.undirected()) throw std::invalid_argument("only undirected graphs are supported");
  const NodeId n = g.num_nodes();
  if (k == 0 || k > static_cast<std::size_t>(std::max<NodeId>(n, 1)))
    throw std::invalid_argument("chunk count must lie in [1, n]");
  ChunkedReport rep;
  rep.chunks = k;
  if (n == 0) return rep;

  std::vector<NodeId> start(k + 1);
  for (std::size_t c = 0; c <= k; ++c) start[c] = 1 + static_cast<NodeId>(c * static_cast<std::size_t>(n) / k);

  // Forward: only the root stack of the forest is kept, and a copy of it at
  // every chunk start.
  DirectExec direct(params, opts, &rep.counter);
  std::vector<Roots> boundary(k);
  {
    Roots stack;
    std::size_t c = 0;
    for (NodeId u = 1; u <= n; ++u) {
      while (c < k && start[c] == u) {
        boundary[c] = stack;
        rep.boundary_messages += stack.size();
        ++c;
      }
      if (u == n) break;
      StatePair gu = row_summary(direct, u, g.row(u));
      stack.push_back({ForestKey{0, static_cast<std::size_t>(u - 1)}, std::move(gu)});
      while (stack.size() >= 2 && stack[stack.size() - 2].first.level == stack.back().first.level) {
        auto right = std::move(stack.back());
        stack.pop_back();
        auto& left = stack.back();
        left.second = direct.tree(TreeKind::Row, left.second, right.second);
        left.first = ForestKey{left.first.level + 1, left.first.index / 2};
      }
    }
  }

  std::map<ForestKey, StatePair> pending;  // d objective / d forest entry, from later chunks
  auto note_peak = [&](std::size_t live) { rep.peak_live = std::max(rep.peak_live, live); };

  for (std::size_t c = k; c-- > 0;) {
    const NodeId s = start[c], e = start[c + 1] - 1;
    if (s > e) continue;
    const NodeId fold_end = std::min<NodeId>(e, n - 1);
    const std::size_t rows_in_chunk = static_cast<std::size_t>(e - s + 1);

    // Row summaries of this chunk, from the bottom-up pass alone.
    std::vector<StatePair> gvals;
    for (NodeId u = s; u <= fold_end; ++u) gvals.push_back(row_summary(direct, u, g.row(u)));

    // Phase B forward: forest and row summaries over the chunk.
    Tape ftape(params, opts.share_lstm);
    TapeExec fex(ftape);
    std::vector<std::pair<ForestKey, Slot>> root_inputs;
    std::vector<std::pair<ForestKey, Slot>> restored;
    for (const auto& [key, val] : boundary[c]) {
      const Slot sl = ftape.input(val);
      root_inputs.push_back({key, sl});
      restored.push_back({key, sl});
    }
    BasicRowForest<Slot> forest;
    forest.reset_to_roots(s - 1, restored);
    std::vector<Slot> hprev_slot(rows_in_chunk, Tape::zero());
    std::vector<Slot> g_slot;
    for (NodeId u = s; u <= e; ++u) {
      hprev_slot[static_cast<std::size_t>(u - s)] = forest.summary(fex, n);
      if (u <= fold_end) {
        g_slot.push_back(ftape.input(gvals[static_cast<std::size_t>(u - s)]));
        forest.update(fex, g_slot.back());
      }
    }
    rep.counter += ftape.counter();
    const std::size_t base_live = rep.boundary_messages + pending.size() + gvals.size() + ftape.num_states();
    note_peak(base_live);

    // Phase A: one tape per row, all decisions of the row.
    std::vector<StatePair> dh(rows_in_chunk, StatePair::zero(params.d()));
    for (NodeId u = e; u >= s; --u) {
      if (u == 1) continue;
      const auto idx = static_cast<std::size_t>(u - s);
      Tape rtape(params, opts.share_lstm);
      TapeExec rex(rtape);
      const Slot hin = rtape.input(ftape.value(hprev_slot[idx]));
      score_row(rex, u, g.row(u), hin, opts);
      rep.log_prob += rtape.log_prob();
      rep.counter += rtape.counter();
      note_peak(base_live + rtape.num_states());
      rtape.backward(grad_out, scale);
      dh[idx] = rtape.grad(hin);
    }

    // Phase B backward.
    for (std::size_t i = 0; i < rows_in_chunk; ++i)
      if (hprev_slot[i] != Tape::zero()) ftape.seed(hprev_slot[i], dh[i]);
    for (auto it = pending.begin(); it != pending.end();) {
      const NodeId row = creating_row(it->first);
      if (row >= s && row <= fold_end) {
        ftape.seed(forest.at(it->first), it->second);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
    std::vector<StatePair> dg;
    if (!ftape.empty()) {
      ftape.backward(grad_out, scale);
      for (const auto& [key, sl] : root_inputs) {
        auto [it, inserted] = pending.try_emplace(key, StatePair::zero(params.d()));
        add_to(it->second, ftape.grad(sl));
      }
      for (Slot sl : g_slot) dg.push_back(ftape.grad(sl));
    } else {
      for (const auto& [key, sl] : root_inputs) pending.try_emplace(key, StatePair::zero(params.d()));
      dg.assign(g_slot.size(), StatePair::zero(params.d()));
    }

    // Phase C: bottom-up pass of each row, seeded with d g_u^0.
    for (NodeId u = s; u <= fold_end; ++u) {
      if (g.row(u).empty()) continue;
      Tape btape(params, opts.share_lstm);
      TapeExec bex(btape);
      const Slot out = row_summary(bex, u, g.row(u));
      rep.counter += btape.counter();
      note_peak(base_live + btape.num_states());
      btape.seed(out, dg[static_cast<std::size_t>(u - s)]);
      btape.backward(grad_out, scale);
    }
  }
  return rep;
}

std::size_t full_tape_live(const Graph& g, const ParamStore& params, const ModelOptions& opts) {
  Tape tape(params, opts.share_lstm);
  TapeExec ex(tape);
  BasicRowForest<Slot> forest;
  const NodeId n = g.num_nodes();
  for (NodeId u = 1; u <= n; ++u) {
    const Slot h_prev = forest.summary(ex, n);
    auto res = score_row(ex, u, g.row(u), h_prev, opts);
    if (u < n) forest.update(ex, res.g);
  }
  return tape.num_states();
}

}  // namespace bigg
