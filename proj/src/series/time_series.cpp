#include "subdetector/series/time_series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "subdetector/errors.hpp"

namespace subdetector {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Locale-independent; an empty field reads as NaN.
std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nan("");
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t from = 0;
  for (;;) {
    std::size_t comma = line.find(',', from);
    out.push_back(line.substr(from, comma == std::string_view::npos ? std::string_view::npos : comma - from));
    if (comma == std::string_view::npos) break;
    from = comma + 1;
  }
  return out;
}

}  // namespace

void repair_non_finite(std::vector<double>& values) {
  std::size_t prev = values.size();  // index of the last finite value seen
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    if (prev == values.size()) {
      for (std::size_t k = 0; k < i; ++k) values[k] = values[i];
    } else if (i > prev + 1) {
      const double a = values[prev], b = values[i], gap = static_cast<double>(i - prev);
      for (std::size_t k = prev + 1; k < i; ++k) values[k] = a + (b - a) * static_cast<double>(k - prev) / gap;
    }
    prev = i;
  }
  if (prev == values.size()) throw DataError("series has no finite values");
  for (std::size_t k = prev + 1; k < values.size(); ++k) values[k] = values[prev];
}

TimeSeries parse_series(std::string_view text, SeriesFormat format, const std::string& origin) {
  TimeSeries ts;
  ts.name = origin;
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 0, columns = 0;
  bool first_row = true;
  std::size_t from = 0;
  while (from <= text.size()) {
    std::size_t nl = text.find('\n', from);
    std::string_view line = trim(text.substr(from, nl == std::string_view::npos ? std::string_view::npos : nl - from));
    from = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    const std::string where = origin + ":" + std::to_string(line_no);

    if (format == SeriesFormat::PlainValues) {
      if (fields.size() != 1) throw DataError(where + ": expected one value per line");
      auto v = parse_number(fields[0]);
      if (!v) throw DataError(where + ": cannot parse '" + std::string(fields[0]) + "'");
      ts.values.push_back(*v);
      continue;
    }

    if (first_row) {
      first_row = false;
      columns = fields.size();
      if (!parse_number(fields[0])) continue;  // header row
    }
    if (fields.size() != 2 || columns != 2) {
      throw DataError(where + ": expected 2 columns 'value,label', found " + std::to_string(fields.size()));
    }
    auto v = parse_number(fields[0]);
    auto y = parse_number(fields[1]);
    if (!v) throw DataError(where + ": cannot parse value '" + std::string(fields[0]) + "'");
    if (!y || (*y != 0.0 && *y != 1.0)) throw DataError(where + ": label must be 0 or 1");
    ts.values.push_back(*v);
    labels.push_back(static_cast<std::uint8_t>(*y));
  }
  if (ts.values.empty()) throw DataError(origin + ": no observations");
  repair_non_finite(ts.values);
  if (format == SeriesFormat::LabeledCsv) ts.labels = std::move(labels);
  return ts;
}

TimeSeries ingest(const std::filesystem::path& path, SeriesFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  TimeSeries ts = parse_series(buf.str(), format, path.string());
  ts.name = path.stem().string();
  return ts;
}

std::vector<double> zscore(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  double m = 0.0;
  for (double v : out) m += v;
  m /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - m) * (v - m);
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (double& v : out) v = sd < 1e-8 ? v - m : (v - m) / sd;
  return out;
}

std::optional<std::size_t> estimate_period(const TimeSeries& series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n < 8) throw DataError("period estimation needs at least 8 points");
  if (max_lag >= n) throw ConfigError("max_lag must be smaller than the series length");

  // Average ranks instead of raw values, so a few large spikes cannot dominate the ACF.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series.values[a] < series.values[b]; });
  std::vector<double> c(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && series.values[order[hi]] == series.values[order[lo]]) ++hi;
    const double r = 0.5 * static_cast<double>(lo + hi - 1);
    for (std::size_t k = lo; k < hi; ++k) c[order[k]] = r;
    lo = hi;
  }
  const double m = 0.5 * static_cast<double>(n - 1);
  double denom = 0.0;
  for (double& v : c) {
    v -= m;
    denom += v * v;
  }
  if (denom < 1e-12) return std::nullopt;

  const std::size_t top = std::min(max_lag + 1, n - 1);
  std::vector<double> acf(top + 1, 0.0);
  for (std::size_t k = 1; k <= top; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) s += c[t] * c[t + k];
    acf[k] = s / denom;
  }
  // Peaks inside the lobe around lag 0 are noise; search past the first zero crossing.
  std::size_t first = 1;
  while (first <= max_lag && acf[first] > 0.0) ++first;
  std::optional<std::size_t> best;
  for (std::size_t k = std::max<std::size_t>(first, 4); k <= max_lag; ++k) {
    const bool peak = acf[k] > acf[k - 1] && (k + 1 > top || acf[k] >= acf[k + 1]);
    if (peak && acf[k] > 0.3 && (!best || acf[k] > acf[*best])) best = k;
  }
  return best;
}

}  // namespace subdetector
