#include <algorithm>
#include <string>

#include "subdetector/errors.hpp"
#include "subdetector/proximity/proximity.hpp"

namespace subdetector {

DiscordReport discord_scores(const SubsequenceSet& set, std::size_t k) {
  if (k == 0) throw ConfigError("discord k must be at least 1");
  const std::size_t n = set.count(), L = set.length();
  auto starts = set.starts();
  std::vector<std::vector<double>> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = znorm(set.window(i));

  // k smallest squared distances per window, kept as a max-heap
  std::vector<std::vector<double>> best(n);
  for (auto& b : best) b.reserve(k);
  auto offer = [k](std::vector<double>& h, double v) {
    if (h.size() < k) {
      h.push_back(v);
      std::push_heap(h.begin(), h.end());
    } else if (v < h.front()) {
      std::pop_heap(h.begin(), h.end());
      h.back() = v;
      std::push_heap(h.begin(), h.end());
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (within_exclusion(starts[i], starts[j], L)) continue;
      double s = 0.0;
      for (std::size_t t = 0; t < L; ++t) {
        const double d = z[i][t] - z[j][t];
        s += d * d;
      }
      offer(best[i], s);
      offer(best[j], s);
    }
  }

  DiscordReport r;
  r.k = k;
  r.exclusion = (L + 1) / 2;
  r.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (best[i].size() < k) {
      throw ConfigError("window " + std::to_string(i) + " has only " + std::to_string(best[i].size()) +
                        " candidates outside the exclusion zone for k=" + std::to_string(k));
    }
    r.scores[i] = best[i].front();
  }
  return r;
}

}  // namespace subdetector
