#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bigg/graph.hpp"

namespace bigg {

enum class Statistic { Degree, Clustering, Orbit, Spectral };

/// "degree", "clustering", "orbit" or "spectral"; throws std::invalid_argument.
Statistic parse_statistic(std::string_view name);
std::string to_string(Statistic s);
/// Comma-separated list, e.g. "degree,clustering".
std::vector<Statistic> parse_statistics(std::string_view list);

inline constexpr int kClusteringBins = 100;
inline constexpr int kSpectralBins = 200;
inline constexpr int kNumOrbits = 15;

class SpectralCapExceeded : public std::runtime_error {
 public:
  SpectralCapExceeded(NodeId n, NodeId cap);
};

struct ExtractOptions {
  NodeId spectral_cap = 1000;
};

/// Degree histogram, entry k = fraction of nodes with degree k.
std::vector<double> degree_histogram(const Graph& g);
/// Local clustering coefficient per node (0 below degree 2), 0-based order.
std::vector<double> clustering_coefficients(const Graph& g);
/// Fraction of nodes per bin of [0, 1] split into 100 half-open bins, the
/// last one closed.
std::vector<double> clustering_histogram(const Graph& g);
/// Eigenvalues of I - D^-1/2 A D^-1/2 in ascending order; isolated nodes
/// contribute a zero row and column.
std::vector<double> normalized_laplacian_spectrum(const Graph& g);
/// Fraction of eigenvalues per bin of [0, 2], 200 bins.
std::vector<double> spectral_histogram(const Graph& g, NodeId cap = ExtractOptions{}.spectral_cap);

// Orbit ids: 0 edge; 1/2 path-of-3 end/middle; 3 triangle; 4/5 path-of-4
// end/middle; 6/7 star leaf/center; 8 four-cycle; 9/10/11 tailed triangle
// tail/degree-2/degree-3; 12/13 diamond degree-2/degree-3; 14 clique.
using OrbitVector = std::array<std::int64_t, kNumOrbits>;

/// Per-node orbit counts over connected induced subgraphs of 2 to 4 nodes.
std::vector<OrbitVector> orbit_counts(const Graph& g);
/// Per-node average of orbit_counts.
std::vector<double> mean_orbit_counts(const Graph& g);

std::vector<double> extract(Statistic s, const Graph& g, const ExtractOptions& opts = {});

/// Each vector is scaled to unit mass (zero vectors are kept), the shorter
/// one padded with zeros, then TV = half the L1 distance.
double total_variation(std::span<const double> a, std::span<const double> b);
double gaussian_tv_kernel(std::span<const double> a, std::span<const double> b, double sigma = 1.0);

/// Squared MMD, V-statistic, clamped at 0. Throws std::invalid_argument for
/// an empty set.
double mmd(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b, double sigma = 1.0);

/// MMD per statistic between two graph sets, extraction spread over
/// `threads` workers.
std::vector<std::pair<Statistic, double>> evaluate(std::span<const Graph> ref, std::span<const Graph> gen,
                                                   std::span<const Statistic> stats,
                                                   const ExtractOptions& opts = {}, int threads = 1);

/// Connected, acyclic, and two rounds of leaf removal leave a path.
bool is_lobster(const Graph& g);
/// Fraction of graphs failing is_lobster. Throws std::invalid_argument for
/// an empty set.
double lobster_error_rate(std::span<const Graph> graphs);

/// Erdos-Renyi reference samples: node counts drawn from the training set's
/// empirical distribution, edge probability equal to its pooled density.
std::vector<Graph> erdos_renyi_baseline(const GraphSet& train, std::size_t count, std::uint64_t seed);

}  // namespace bigg
