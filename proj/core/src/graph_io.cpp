#include "bigg/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

namespace bigg {

FormatError::FormatError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

void write_graph(std::ostream& os, const Graph& g) {
  if (!g.undirected()) throw std::invalid_argument("only undirected graphs are serialized");
  os << g.num_nodes() << ' ' << g.num_edges() << '\n';
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

void write_graphs(std::ostream& os, const GraphSet& set) {
  for (std::size_t i = 0; i < set.graphs.size(); ++i) {
    if (i > 0) os << "---\n";
    write_graph(os, set.graphs[i]);
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Two non-negative integers separated by whitespace, nothing else.
bool parse_pair(std::string_view s, long long& a, long long& b) {
  auto skip_ws = [&] {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  };
  auto number = [&](long long& out) {
    skip_ws();
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p == s.data()) return false;
    s.remove_prefix(static_cast<std::size_t>(p - s.data()));
    return true;
  };
  if (!number(a) || !number(b)) return false;
  skip_ws();
  return s.empty();
}

struct PendingGraph {
  std::size_t header_line = 0;
  long long n = 0;
  long long m = 0;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::set<std::pair<NodeId, NodeId>> seen;
};

Graph finish(PendingGraph& p, std::size_t line) {
  if (static_cast<long long>(p.edges.size()) != p.m)
    throw FormatError(line, "expected " + std::to_string(p.m) + " edges, found " +
                                std::to_string(p.edges.size()));
  return Graph::from_edges(static_cast<NodeId>(p.n), p.edges);
}

}  // namespace

GraphSet read_graphs(std::istream& is) {
  GraphSet out;
  std::optional<PendingGraph> cur;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "---") {
      if (!cur) throw FormatError(lineno, "separator without a preceding graph");
      out.graphs.push_back(finish(*cur, lineno));
      cur.reset();
      continue;
    }
    long long a = 0, b = 0;
    if (!parse_pair(line, a, b)) throw FormatError(lineno, "expected two integers");
    if (!cur) {
      if (a < 1) throw FormatError(lineno, "malformed header: node count must be positive");
      if (b < 0 || b > a * (a - 1) / 2) throw FormatError(lineno, "malformed header: bad edge count");
      cur.emplace();
      cur->header_line = lineno;
      cur->n = a;
      cur->m = b;
      continue;
    }
    if (a < 1 || b < 1 || a > cur->n || b > cur->n)
      throw FormatError(lineno, "node index out of range");
    if (a == b) throw FormatError(lineno, "self loop");
    NodeId u = static_cast<NodeId>(a), v = static_cast<NodeId>(b);
    if (u < v) std::swap(u, v);
    if (!cur->seen.emplace(u, v).second) throw FormatError(lineno, "duplicate edge");
    if (static_cast<long long>(cur->edges.size()) == cur->m)
      throw FormatError(lineno, "more edges than declared in header");
    cur->edges.emplace_back(u, v);
  }
  if (cur) out.graphs.push_back(finish(*cur, lineno));
  return out;
}

GraphSet load_graphs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_graphs(in);
}

void save_graphs(const GraphSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_graphs(out, set);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace bigg
