#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "subdetector/series/windows.hpp"

namespace subdetector {

constexpr double kDegenerateStd = 1e-8;

// Zero mean, unit population std; the zero vector when std(x) < 1e-8.
std::vector<double> znorm(std::span<const double> x);

// Windows closer than half a window length are trivial matches of each other.
inline bool within_exclusion(std::size_t start_a, std::size_t start_b, std::size_t length) {
  const std::size_t gap = start_a > start_b ? start_a - start_b : start_b - start_a;
  return 2 * gap < length;
}

// Distances between windows at every scale l = delta * 2^p under two measures.
// Measure m < P+1 is the Euclidean distance of the length-l_m prefixes; measure
// P+1+p is the Euclidean distance of the separately z-normalized prefixes.
// Values are computed on demand from cached z-normalized prefixes, so memory is O(N*L).
class DistanceProfile {
 public:
  explicit DistanceProfile(const SubsequenceSet& set);

  std::size_t count() const { return n_; }
  std::size_t measure_count() const { return 2 * scales_.size(); }
  std::size_t scale_of(std::size_t measure) const { return scales_[measure % scales_.size()]; }

  // All measures for the pair (i, j), written to out[0 .. measure_count()).
  void pair(std::size_t i, std::size_t j, std::span<double> out) const;
  double euclidean(std::size_t i, std::size_t j, std::size_t p) const;
  double znormalized(std::size_t i, std::size_t j, std::size_t p) const;

  // Same measures for a window that is not part of the set, against window j.
  void against(std::span<const double> window, std::size_t j, std::span<double> out) const;

 private:
  const SubsequenceSet* set_;
  std::size_t n_, length_, packed_;
  std::vector<std::size_t> scales_;  // prefix length per scale
  std::vector<std::size_t> offsets_;  // start of each scale inside a packed row
  std::vector<double> zprefix_;  // N rows of concatenated z-normalized prefixes
  void pack(std::span<const double> window, std::span<double> dst) const;
  void measures(std::span<const double> a, std::span<const double> za, std::span<const double> b,
                std::span<const double> zb, std::span<double> out) const;
};

DistanceProfile pairwise_distances(const SubsequenceSet& set);

// Directed kNN graph: edge j -> i (j is a neighbour of i) is stored with node i.
struct PriorGraph {
  std::size_t nodes = 0;
  std::size_t attr_dim = 0;
  std::vector<std::size_t> offsets;  // nodes + 1 entries; edges of i are [offsets[i], offsets[i+1])
  std::vector<std::size_t> sources;  // neighbour j per edge, ascending within a node
  std::vector<double> attrs;         // edge_count x attr_dim, each distance divided by sqrt(l)

  std::size_t edge_count() const { return sources.size(); }
  std::size_t in_degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  std::span<const std::size_t> neighbors(std::size_t i) const;
  std::span<const double> attr(std::size_t edge) const;
  bool has_edge(std::size_t j, std::size_t i) const;
};

// Union over all measures of each node's K nearest non-excluded windows.
// Ties go to the lower window index. Throws GraphError when a node has fewer
// than K candidates outside its exclusion zone.
PriorGraph build_prior_graph(const SubsequenceSet& set, const DistanceProfile& profile, std::size_t K);

// Edge attribute vector for a window outside the set against window j.
std::vector<double> edge_attributes(const DistanceProfile& profile, std::span<const double> window, std::size_t j);

// "i j attr_1 ... attr_m" per edge j -> i, %.17g.
void write_edge_list(std::ostream& out, const PriorGraph& graph);

struct DiscordReport {
  std::vector<double> scores;
  std::size_t k = 1;
  std::size_t exclusion = 0;  // windows with |start_i - start_j| < exclusion are skipped
};

// Squared z-normalized full-length distance to the k-th nearest non-excluded window.
DiscordReport discord_scores(const SubsequenceSet& set, std::size_t k);

}  // namespace subdetector
