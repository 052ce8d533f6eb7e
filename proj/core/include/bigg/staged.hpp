#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "bigg/edge_tree.hpp"
#include "bigg/graph.hpp"
#include "bigg/params.hpp"

namespace bigg {

enum class Stage : int { BottomUp = 0, Forest = 1, Summary = 2, TopDown = 3 };

/// Number of sequential batched steps (barriers) in each stage.
struct StagePlan {
  std::array<std::size_t, 4> barriers{};
  std::array<std::size_t, 4> cells{};  // cell applications per stage

  std::size_t at(Stage s) const { return barriers[static_cast<std::size_t>(s)]; }
  std::size_t max_barriers() const;
};

StagePlan plan_stages(const Graph& g, int bits_length);

struct StagedResult {
  double log_prob = 0.0;
  StagePlan plan;
  OpCounter counter;
};

/// Training-time log p(A | n): bottom-up summaries of every row tree, forest
/// merges, row summaries and gates, then the top-down decisions, each stage
/// batched level by level on one tape. When `grad_out` is non-empty the
/// gradient of scale * log p is accumulated into it.
StagedResult staged_log_likelihood(const Graph& g, const ParamStore& params, const ModelOptions& opts = {},
                                   std::span<double> grad_out = {}, double scale = 1.0);

}  // namespace bigg
