#pragma once

#include <cstdint>

#include "bigg/graph.hpp"

namespace bigg {

/// 4-neighbour lattice, row-major labels.
Graph gen_grid(int rows, int cols);

/// G(n, p): every unordered pair independently with probability p.
Graph gen_erdos_renyi(NodeId n, double p, std::uint64_t seed);

/// Random lobster: backbone path of length uniform in [0, 2*expected_path_len]
/// (at least one node); each backbone node grows first-level leaves while a
/// uniform draw stays below p1, each of those grows second-level leaves while
/// a draw stays below p2. Stops adding nodes at max_nodes.
Graph gen_lobster(int expected_path_len, double p1, double p2, NodeId max_nodes,
                  std::uint64_t seed);

}  // namespace bigg
