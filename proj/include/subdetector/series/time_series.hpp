#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace subdetector {

struct TimeSeries {
  std::vector<double> values;
  std::optional<std::size_t> period;
  // 1 marks an anomalous point; same length as values when present.
  std::optional<std::vector<std::uint8_t>> labels;
  std::string name;

  std::size_t size() const { return values.size(); }
  bool has_labels() const { return labels.has_value(); }
};

enum class SeriesFormat { PlainValues, LabeledCsv };

// Reads a series, repairing non-finite entries by linear interpolation between
// the nearest finite neighbours (edges copy the nearest finite value).
// Throws DataError on unreadable files, ragged rows, bad labels or all-NaN input.
TimeSeries ingest(const std::filesystem::path& path, SeriesFormat format);

// Parses text already in memory; `origin` only labels error messages.
TimeSeries parse_series(std::string_view text, SeriesFormat format, const std::string& origin = "<memory>");

// In-place interpolation of non-finite entries. Throws DataError if none are finite.
void repair_non_finite(std::vector<double>& values);

// Global z-normalization. A series with std below 1e-8 is only mean-centered.
std::vector<double> zscore(std::span<const double> values);

// Dominant period from the autocorrelation of the series' ranks. Among local ACF
// maxima past the first zero crossing with lag in [4, max_lag], returns the
// highest one if it exceeds 0.3.
// Throws DataError for series shorter than 8 points and ConfigError if max_lag >= T.
std::optional<std::size_t> estimate_period(const TimeSeries& series, std::size_t max_lag);

}  // namespace subdetector
