#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "subdetector/series/time_series.hpp"

namespace subdetector {

struct WindowConfig {
  std::size_t delta = 10;     // indivisible segment length
  std::size_t max_scale = 5;  // P
  std::size_t stride = 20;    // tau

  std::size_t max_length() const { return delta << max_scale; }
  std::size_t scale_count() const { return max_scale + 1; }
  std::size_t scale_length(std::size_t p) const { return delta << p; }

  // delta = ceil(period / 8) for periodic series, 10 otherwise; stride = 2 * delta.
  static WindowConfig for_period(std::optional<std::size_t> period, std::size_t max_scale = 5);
};

// N x L window matrix cut from a series at a fixed stride.
class SubsequenceSet {
 public:
  SubsequenceSet() = default;
  SubsequenceSet(std::vector<double> windows, std::vector<std::size_t> starts, WindowConfig config,
                 std::optional<std::vector<std::uint8_t>> window_labels = std::nullopt);

  std::size_t count() const { return starts_.size(); }
  std::size_t length() const { return config_.max_length(); }
  const WindowConfig& config() const { return config_; }
  std::span<const std::size_t> starts() const { return starts_; }
  std::span<const double> window(std::size_t i) const;
  std::span<const double> matrix() const { return windows_; }
  const std::optional<std::vector<std::uint8_t>>& window_labels() const { return window_labels_; }

 private:
  std::vector<double> windows_;
  std::vector<std::size_t> starts_;
  WindowConfig config_;
  std::optional<std::vector<std::uint8_t>> window_labels_;
};

// N = floor((T - L) / stride) + 1 windows. Throws ConfigError when L > T.
SubsequenceSet make_windows(const TimeSeries& series, const WindowConfig& config);

// Prefixes of window i with lengths delta * 2^p, p = 0..P.
std::vector<std::span<const double>> multi_length_view(const SubsequenceSet& set, std::size_t i);

}  // namespace subdetector
