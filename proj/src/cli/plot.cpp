#include "subdetector/cli/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

namespace subdetector::cli {
namespace {

constexpr double kWidth = 1200, kPanel = 180, kMargin = 30;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Polyline through per-column min and max so long series stay small.
void polyline(std::ostream& out, std::span<const double> y, double top, const char* color) {
  if (y.empty()) return;
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it, span = std::max(*hi_it - lo, 1e-12);
  const std::size_t columns = std::min<std::size_t>(y.size(), 2 * static_cast<std::size_t>(kWidth));
  auto px = [&](std::size_t i) { return kMargin + (kWidth - 2 * kMargin) * static_cast<double>(i) / static_cast<double>(y.size()); };
  auto py = [&](double v) { return top + kPanel - (v - lo) / span * kPanel; };
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.8\" points=\"";
  for (std::size_t c = 0; c < columns; ++c) {
    const std::size_t b = c * y.size() / columns, e = std::max(b + 1, (c + 1) * y.size() / columns);
    const auto [mn, mx] = std::minmax_element(y.begin() + static_cast<std::ptrdiff_t>(b), y.begin() + static_cast<std::ptrdiff_t>(e));
    out << num(px(b)) << ',' << num(py(*mn)) << ' ' << num(px(b)) << ',' << num(py(*mx)) << ' ';
  }
  out << "\"/>\n";
}

void band(std::ostream& out, std::size_t begin, std::size_t end, std::size_t total, double height, const char* color,
          double opacity) {
  const double scale = (kWidth - 2 * kMargin) / static_cast<double>(total);
  out << "<rect x=\"" << num(kMargin + scale * static_cast<double>(begin)) << "\" y=\"" << num(kMargin) << "\" width=\""
      << num(std::max(scale * static_cast<double>(end - begin), 0.5)) << "\" height=\"" << num(height) << "\" fill=\""
      << color << "\" fill-opacity=\"" << opacity << "\"/>\n";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_score_plot(std::ostream& out, const TimeSeries& series, std::span<const double> point_scores,
                      std::span<const double> window_scores, const SubsequenceSet& set, std::size_t top_k) {
  const double height = 2 * kPanel + 3 * kMargin;
  const std::size_t total = std::max<std::size_t>(series.size(), 1);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (series.labels) {
    const auto& l = *series.labels;
    for (std::size_t t = 0; t < l.size();) {
      if (!l[t]) {
        ++t;
        continue;
      }
      std::size_t e = t;
      while (e < l.size() && l[e]) ++e;
      band(out, t, e, total, height - 2 * kMargin, "#d62728", 0.15);
      t = e;
    }
  }
  std::vector<std::size_t> order(window_scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return window_scores[a] > window_scores[b]; });
  for (std::size_t r = 0; r < std::min(top_k, order.size()); ++r) {
    const std::size_t s = set.starts()[order[r]];
    band(out, s, std::min(s + set.length(), total), total, height - 2 * kMargin, "#ff7f0e", 0.2);
  }
  polyline(out, series.values, kMargin, "#1f77b4");
  polyline(out, point_scores, 2 * kMargin + kPanel, "#2ca02c");
  out << "<text x=\"" << kMargin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series.name)
      << "</text>\n"
      << "<text x=\"" << kMargin << "\" y=\"" << num(kMargin + kPanel + 20) << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << "anomaly score</text>\n</svg>\n";
}

}  // namespace subdetector::cli
