#include <algorithm>

#include "bigg/metrics.hpp"

namespace bigg {

namespace {

class OrbitCounter {
 public:
  explicit OrbitCounter(const Graph& g) : adj_(g.adjacency0()), counts_(adj_.size(), OrbitVector{}) {
    for (std::size_t v = 0; v < adj_.size(); ++v) counts_[v][0] = static_cast<std::int64_t>(adj_[v].size());
  }

  std::vector<OrbitVector> run() {
    const auto n = static_cast<NodeId>(adj_.size());
    for (NodeId v = 0; v < n; ++v) {
      std::vector<NodeId> ext;
      for (NodeId w : adj_[static_cast<std::size_t>(v)])
        if (w > v) ext.push_back(w);
      sub_ = {v};
      extend(ext, v);
    }
    return std::move(counts_);
  }

 private:
  bool adjacent(NodeId a, NodeId b) const {
    const auto& r = adj_[static_cast<std::size_t>(a)];
    return std::binary_search(r.begin(), r.end(), b);
  }

  // Enumeration of connected vertex sets, each found exactly once from its
  // smallest vertex.
  void extend(std::vector<NodeId> ext, NodeId root) {
    if (sub_.size() >= 3) classify();
    if (sub_.size() == 4) return;
    while (!ext.empty()) {
      const NodeId w = ext.back();
      ext.pop_back();
      std::vector<NodeId> next = ext;
      for (NodeId x : adj_[static_cast<std::size_t>(w)]) {
        if (x <= root) continue;
        if (std::find(sub_.begin(), sub_.end(), x) != sub_.end()) continue;
        if (std::find(next.begin(), next.end(), x) != next.end()) continue;
        bool near_sub = false;
        for (NodeId s : sub_) near_sub = near_sub || adjacent(s, x);
        if (!near_sub) next.push_back(x);
      }
      sub_.push_back(w);
      extend(std::move(next), root);
      sub_.pop_back();
    }
  }

  void classify() {
    const std::size_t k = sub_.size();
    std::array<int, 4> deg{};
    int edges = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        if (adjacent(sub_[i], sub_[j])) {
          ++deg[i];
          ++deg[j];
          ++edges;
        }
    const int max_deg = *std::max_element(deg.begin(), deg.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = 0; i < k; ++i) {
      int orbit = 0;
      if (k == 3) {
        orbit = edges == 3 ? 3 : (deg[i] == 2 ? 2 : 1);
      } else if (edges == 3) {
        if (max_deg == 3) orbit = deg[i] == 3 ? 7 : 6;
        else orbit = deg[i] == 1 ? 4 : 5;
      } else if (edges == 4) {
        if (max_deg == 3) orbit = deg[i] == 1 ? 9 : (deg[i] == 2 ? 10 : 11);
        else orbit = 8;
      } else if (edges == 5) {
        orbit = deg[i] == 2 ? 12 : 13;
      } else {
        orbit = 14;
      }
      ++counts_[static_cast<std::size_t>(sub_[i])][static_cast<std::size_t>(orbit)];
    }
  }

  std::vector<std::vector<NodeId>> adj_;
  std::vector<OrbitVector> counts_;
  std::vector<NodeId> sub_;
};

}  // namespace

std::vector<OrbitVector> orbit_counts(const Graph& g) { return OrbitCounter(g).run(); }

std::vector<double> mean_orbit_counts(const Graph& g) {
  std::vector<double> mean(kNumOrbits, 0.0);
  const auto counts = orbit_counts(g);
  if (counts.empty()) return mean;
  for (const auto& c : counts)
    for (int o = 0; o < kNumOrbits; ++o) mean[static_cast<std::size_t>(o)] += static_cast<double>(c[static_cast<std::size_t>(o)]);
  for (double& x : mean) x /= static_cast<double>(counts.size());
  return mean;
}

}  // namespace bigg
