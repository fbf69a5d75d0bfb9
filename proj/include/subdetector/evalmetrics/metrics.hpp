#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "subdetector/series/windows.hpp"

namespace subdetector {

// Point score = max over covering windows; points past the last window take its score.
std::vector<double> aggregate_points(std::span<const double> window_scores, const SubsequenceSet& set,
                                     std::size_t series_length);

// Mann-Whitney statistic P(s+ > s-) + P(tie) / 2. Throws MetricError with one class only.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Maximal runs of 1s as [begin, end) point ranges.
std::vector<std::pair<std::size_t, std::size_t>> anomaly_segments(std::span<const std::uint8_t> labels);

// Fraction of the n segments overlapped by at least one of the k*n best-scoring
// windows (ties broken by lower index). Throws MetricError without segments.
double recall_at_k(std::span<const double> window_scores, const SubsequenceSet& set,
                   std::span<const std::pair<std::size_t, std::size_t>> segments, std::size_t k);

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;  // predict anomalous when score >= threshold
};

// Best point-wise F1 over thresholds at the observed score values.
F1Result best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MetricReport {
  double auc = 0.0;
  std::map<std::size_t, double> recall_at_k;
  double best_f1 = 0.0;
  double threshold_at_best_f1 = 0.0;
};

MetricReport evaluate(std::span<const double> window_scores, const SubsequenceSet& set,
                      std::span<const std::uint8_t> point_labels, const std::vector<std::size_t>& ks = {1, 3});

// Unweighted mean of each metric across series.
MetricReport average_reports(const std::vector<MetricReport>& reports);

// Flat key=value block, %.17g.
void write_report(std::ostream& out, const MetricReport& report);

// "index,point_score,label" with a header; label column empty when labels are absent.
void write_score_csv(std::ostream& out, std::span<const double> point_scores, std::span<const std::uint8_t> labels);

}  // namespace subdetector
