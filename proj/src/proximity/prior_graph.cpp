#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>

#include "subdetector/errors.hpp"
#include "subdetector/proximity/proximity.hpp"

namespace subdetector {
namespace {

using Candidate = std::pair<double, std::size_t>;  // (distance, index); lexicographic order breaks ties by index

// Fixed-capacity max-heaps keeping the K smallest candidates per slot.
class TopK {
 public:
  TopK(std::size_t slots, std::size_t k) : k_(k), heap_(slots * k), fill_(slots, 0) {}

  void offer(std::size_t slot, Candidate c) {
    Candidate* h = heap_.data() + slot * k_;
    std::size_t& n = fill_[slot];
    if (n < k_) {
      h[n++] = c;
      std::push_heap(h, h + n);
    } else if (c < h[0]) {
      std::pop_heap(h, h + n);
      h[n - 1] = c;
      std::push_heap(h, h + n);
    }
  }

  std::span<const Candidate> slot(std::size_t s) const { return {heap_.data() + s * k_, fill_[s]}; }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
  std::vector<std::size_t> fill_;
};

}  // namespace

std::span<const std::size_t> PriorGraph::neighbors(std::size_t i) const {
  return std::span<const std::size_t>(sources).subspan(offsets[i], offsets[i + 1] - offsets[i]);
}

std::span<const double> PriorGraph::attr(std::size_t edge) const {
  return std::span<const double>(attrs).subspan(edge * attr_dim, attr_dim);
}

bool PriorGraph::has_edge(std::size_t j, std::size_t i) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

PriorGraph build_prior_graph(const SubsequenceSet& set, const DistanceProfile& profile, std::size_t K) {
  const std::size_t n = set.count(), L = set.length(), M = profile.measure_count();
  if (K == 0) throw GraphError("K must be positive");
  if (profile.count() != n) throw ContractViolation("distance profile does not belong to this window set");
  auto starts = set.starts();

  std::vector<std::size_t> candidates(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!within_exclusion(starts[i], starts[j], L)) {
        ++candidates[i];
        ++candidates[j];
      }
  for (std::size_t i = 0; i < n; ++i) {
    if (candidates[i] < K) {
      throw GraphError("window " + std::to_string(i) + " has " + std::to_string(candidates[i]) +
                       " neighbours outside the exclusion zone but K=" + std::to_string(K) +
                       "; use a smaller K or window length");
    }
  }

  TopK top(n * M, K);
  std::vector<double> d(M);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (within_exclusion(starts[i], starts[j], L)) continue;
      profile.pair(i, j, d);
      for (std::size_t m = 0; m < M; ++m) {
        top.offer(i * M + m, {d[m], j});
        top.offer(j * M + m, {d[m], i});
      }
    }
  }

  PriorGraph g;
  g.nodes = n;
  g.attr_dim = M;
  g.offsets.assign(1, 0);
  std::vector<std::size_t> nb;
  for (std::size_t i = 0; i < n; ++i) {
    nb.clear();
    for (std::size_t m = 0; m < M; ++m)
      for (const Candidate& c : top.slot(i * M + m)) nb.push_back(c.second);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    for (std::size_t j : nb) {
      profile.pair(i, j, d);
      for (std::size_t m = 0; m < M; ++m) g.attrs.push_back(d[m] / std::sqrt(static_cast<double>(profile.scale_of(m))));
      g.sources.push_back(j);
    }
    g.offsets.push_back(g.sources.size());
  }
  return g;
}

std::vector<double> edge_attributes(const DistanceProfile& profile, std::span<const double> window, std::size_t j) {
  std::vector<double> d(profile.measure_count());
  profile.against(window, j, d);
  for (std::size_t m = 0; m < d.size(); ++m) d[m] /= std::sqrt(static_cast<double>(profile.scale_of(m)));
  return d;
}

void write_edge_list(std::ostream& out, const PriorGraph& graph) {
  char buf[32];
  for (std::size_t i = 0; i < graph.nodes; ++i) {
    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
      out << i << ' ' << graph.sources[e];
      for (double a : graph.attr(e)) {
        std::snprintf(buf, sizeof buf, "%.17g", a);
        out << ' ' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace subdetector
