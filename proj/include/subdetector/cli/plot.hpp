#pragma once

#include <iosfwd>
#include <span>

#include "subdetector/series/windows.hpp"

namespace subdetector::cli {

// Self-contained SVG: the series on top, point scores below, labeled points and
// the top_k highest-scoring windows shaded.
void write_score_plot(std::ostream& out, const TimeSeries& series, std::span<const double> point_scores,
                      std::span<const double> window_scores, const SubsequenceSet& set, std::size_t top_k);

}  // namespace subdetector::cli
