#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bigg/graph.hpp"

namespace bigg {

enum class OrderKind { DFS, BFS, Default, KCore, DegreeAscending, DegreeDescending };

/// Accepts "dfs", "bfs", "default", "kcore", "degree-asc", "degree-desc".
/// Throws std::invalid_argument for anything else.
OrderKind parse_order_kind(std::string_view name);
std::string to_string(OrderKind kind);

/// Old labels listed in their new order: result[i] is the old label that
/// becomes node i + 1.
///
/// DFS and BFS start from the maximum-degree node (smallest label on ties),
/// expand neighbours in ascending label order and restart the same way on
/// each remaining component.
std::vector<NodeId> node_order(const Graph& g, OrderKind kind);

/// Applies a node order as produced by node_order().
Graph relabel(const Graph& g, const std::vector<NodeId>& order);

Graph reorder(const Graph& g, OrderKind kind);

/// k-core number of every node (0-based index).
std::vector<int> core_numbers(const Graph& g);

}  // namespace bigg
