#pragma once

#include <cstddef>
#include <span>

#include "bigg/edge_tree.hpp"
#include "bigg/graph.hpp"
#include "bigg/params.hpp"

namespace bigg {

struct ChunkedReport {
  double log_prob = 0.0;
  std::size_t chunks = 0;
  /// Largest number of simultaneously live state pairs: stored boundary
  /// roots, pending boundary gradients, the current chunk's cached row
  /// summaries and the slots of every open tape.
  std::size_t peak_live = 0;
  std::size_t boundary_messages = 0;
  OpCounter counter;
};

/// Number of row chunks: max(1, round(sqrt(m / log2 n))), at most n.
std::size_t choose_k(NodeId n, std::size_t m);

/// Gradient of scale * log p(A | n) accumulated into `grad_out`, computed
/// with the rows split into `k` contiguous chunks. Only the forest roots at
/// chunk starts are kept from the forward pass; each chunk is recomputed
/// during the reverse sweep. Throws std::invalid_argument unless 1 <= k <= max(n, 1).
ChunkedReport chunked_backprop(const Graph& g, const ParamStore& params, const ModelOptions& opts, std::size_t k,
                               std::span<double> grad_out, double scale = 1.0);

/// Live state pairs of a single-tape backward pass over the whole graph,
/// for comparison with ChunkedReport::peak_live.
std::size_t full_tape_live(const Graph& g, const ParamStore& params, const ModelOptions& opts = {});

}  // namespace bigg
