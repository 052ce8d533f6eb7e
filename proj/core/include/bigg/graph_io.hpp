#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "bigg/graph.hpp"

namespace bigg {

/// Parse failure in a graph file; `line()` is 1-based.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Edge-list text format:
//   n m
//   u v        (m lines, 1 <= v < u <= n)
// Lines starting with '#' are ignored. A graph set separates graphs with a
// line holding exactly "---".

void write_graph(std::ostream& os, const Graph& g);
void write_graphs(std::ostream& os, const GraphSet& set);
GraphSet read_graphs(std::istream& is);

GraphSet load_graphs(const std::filesystem::path& path);
void save_graphs(const GraphSet& set, const std::filesystem::path& path);

}  // namespace bigg
