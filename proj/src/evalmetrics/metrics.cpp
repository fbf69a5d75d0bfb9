#include "subdetector/evalmetrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "subdetector/errors.hpp"

namespace subdetector {
namespace {

void check_classes(std::span<const double> scores, std::span<const std::uint8_t> labels, const char* metric) {
  if (scores.size() != labels.size()) throw MetricError(std::string(metric) + ": scores and labels differ in length");
  std::size_t pos = 0;
  for (std::uint8_t y : labels) pos += y ? 1 : 0;
  if (pos == 0 || pos == labels.size()) throw MetricError(std::string(metric) + ": labels contain a single class");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> aggregate_points(std::span<const double> window_scores, const SubsequenceSet& set,
                                     std::size_t series_length) {
  const std::size_t n = set.count(), L = set.length();
  if (window_scores.size() != n) throw DimensionError("aggregate_points: one score per window required");
  if (n == 0) throw DimensionError("aggregate_points: no windows");
  for (double s : window_scores)
    if (!std::isfinite(s)) throw DataError("aggregate_points: non-finite window score");
  std::vector<double> out(series_length, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t end = std::min(set.starts()[i] + L, series_length);
    for (std::size_t t = set.starts()[i]; t < end; ++t) out[t] = std::max(out[t], window_scores[i]);
  }
  // Points not covered by any window: trailing remainder (or gaps when stride > L).
  std::size_t last = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (set.starts()[i] >= set.starts()[last]) last = i;
  for (double& v : out)
    if (v == -std::numeric_limits<double>::infinity()) v = window_scores[last];
  return out;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_classes(scores, labels, "auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of positive ranks with tied groups sharing their average rank.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t e = k;
    while (e < order.size() && scores[order[e]] == scores[order[k]]) ++e;
    const double avg = 0.5 * static_cast<double>(k + 1 + e);  // mean of ranks k+1 .. e
    for (std::size_t u = k; u < e; ++u) {
      if (labels[order[u]]) {
        rank_sum += avg;
        ++pos;
      }
    }
    k = e;
  }
  const double np = static_cast<double>(pos), nn = static_cast<double>(scores.size() - pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<std::pair<std::size_t, std::size_t>> anomaly_segments(std::span<const std::uint8_t> labels) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t t = 0; t < labels.size();) {
    if (!labels[t]) {
      ++t;
      continue;
    }
    std::size_t e = t;
    while (e < labels.size() && labels[e]) ++e;
    out.emplace_back(t, e);
    t = e;
  }
  return out;
}

double recall_at_k(std::span<const double> window_scores, const SubsequenceSet& set,
                   std::span<const std::pair<std::size_t, std::size_t>> segments, std::size_t k) {
  if (segments.empty()) throw MetricError("recall_at_k: no anomalous segments");
  if (window_scores.size() != set.count()) throw DimensionError("recall_at_k: one score per window required");
  const std::size_t take = std::min(k * segments.size(), set.count());
  std::vector<std::size_t> order(set.count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return window_scores[a] > window_scores[b]; });
  std::vector<bool> found(segments.size(), false);
  const std::size_t L = set.length();
  for (std::size_t r = 0; r < take; ++r) {
    const std::size_t s = set.starts()[order[r]], e = s + L;
    for (std::size_t g = 0; g < segments.size(); ++g) {
      if (s < segments[g].second && segments[g].first < e) found[g] = true;
    }
  }
  return static_cast<double>(std::count(found.begin(), found.end(), true)) / static_cast<double>(segments.size());
}

F1Result best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_classes(scores, labels, "best_f1");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double total_pos = 0.0;
  for (std::uint8_t y : labels) total_pos += y ? 1.0 : 0.0;
  F1Result best{0.0, scores[order.front()]};
  double tp = 0.0, predicted = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t e = k;
    while (e < order.size() && scores[order[e]] == scores[order[k]]) {
      tp += labels[order[e]] ? 1.0 : 0.0;
      predicted += 1.0;
      ++e;
    }
    const double f1 = 2.0 * tp / (predicted + total_pos);
    if (f1 > best.f1) best = {f1, scores[order[k]]};
    k = e;
  }
  return best;
}

MetricReport evaluate(std::span<const double> window_scores, const SubsequenceSet& set,
                      std::span<const std::uint8_t> point_labels, const std::vector<std::size_t>& ks) {
  MetricReport r;
  std::vector<double> points = aggregate_points(window_scores, set, point_labels.size());
  r.auc = auc(points, point_labels);
  auto segments = anomaly_segments(point_labels);
  for (std::size_t k : ks) r.recall_at_k[k] = recall_at_k(window_scores, set, segments, k);
  F1Result f = best_f1(points, point_labels);
  r.best_f1 = f.f1;
  r.threshold_at_best_f1 = f.threshold;
  return r;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw MetricError("no reports to average");
  MetricReport avg;
  const double n = static_cast<double>(reports.size());
  for (const MetricReport& r : reports) {
    avg.auc += r.auc / n;
    avg.best_f1 += r.best_f1 / n;
    avg.threshold_at_best_f1 += r.threshold_at_best_f1 / n;
    for (auto [k, v] : r.recall_at_k) avg.recall_at_k[k] += v / n;
  }
  return avg;
}

void write_report(std::ostream& out, const MetricReport& report) {
  out << "auc=" << fmt(report.auc) << '\n';
  for (auto [k, v] : report.recall_at_k) out << "recall_at_" << k << '=' << fmt(v) << '\n';
  out << "best_f1=" << fmt(report.best_f1) << '\n';
  out << "threshold_at_best_f1=" << fmt(report.threshold_at_best_f1) << '\n';
}

void write_score_csv(std::ostream& out, std::span<const double> point_scores, std::span<const std::uint8_t> labels) {
  out << "index,point_score,label\n";
  for (std::size_t t = 0; t < point_scores.size(); ++t) {
    out << t << ',' << fmt(point_scores[t]) << ',';
    if (t < labels.size()) out << static_cast<int>(labels[t]);
    out << '\n';
  }
}

}  // namespace subdetector
