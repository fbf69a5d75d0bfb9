#include "subdetector/series/windows.hpp"

#include <algorithm>
#include <string>

#include "subdetector/errors.hpp"

namespace subdetector {

WindowConfig WindowConfig::for_period(std::optional<std::size_t> period, std::size_t max_scale) {
  WindowConfig c;
  c.delta = period ? std::max<std::size_t>(1, (*period + 7) / 8) : 10;
  c.max_scale = max_scale;
  c.stride = 2 * c.delta;
  return c;
}

SubsequenceSet::SubsequenceSet(std::vector<double> windows, std::vector<std::size_t> starts, WindowConfig config,
                               std::optional<std::vector<std::uint8_t>> window_labels)
    : windows_(std::move(windows)),
      starts_(std::move(starts)),
      config_(config),
      window_labels_(std::move(window_labels)) {
  if (windows_.size() != starts_.size() * config_.max_length()) {
    throw DimensionError("SubsequenceSet: window matrix does not match " + std::to_string(starts_.size()) +
                         " windows of length " + std::to_string(config_.max_length()));
  }
  if (window_labels_ && window_labels_->size() != starts_.size()) {
    throw DimensionError("SubsequenceSet: one label per window required");
  }
}

std::span<const double> SubsequenceSet::window(std::size_t i) const {
  if (i >= count()) throw ContractViolation("window index " + std::to_string(i) + " out of range");
  return std::span<const double>(windows_).subspan(i * length(), length());
}

SubsequenceSet make_windows(const TimeSeries& series, const WindowConfig& config) {
  if (config.delta == 0 || config.stride == 0) throw ConfigError("delta and stride must be positive");
  const std::size_t T = series.size(), L = config.max_length();
  if (L > T) {
    throw ConfigError("window length " + std::to_string(L) + " exceeds series length " + std::to_string(T));
  }
  const std::size_t n = (T - L) / config.stride + 1;
  std::vector<double> windows;
  windows.reserve(n * L);
  std::vector<std::size_t> starts(n);
  for (std::size_t i = 0; i < n; ++i) {
    starts[i] = i * config.stride;
    windows.insert(windows.end(), series.values.begin() + static_cast<std::ptrdiff_t>(starts[i]),
                   series.values.begin() + static_cast<std::ptrdiff_t>(starts[i] + L));
  }
  std::optional<std::vector<std::uint8_t>> labels;
  if (series.labels) {
    if (series.labels->size() != T) throw DataError("label count does not match series length");
    labels.emplace(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto first = series.labels->begin() + static_cast<std::ptrdiff_t>(starts[i]);
      (*labels)[i] = std::any_of(first, first + static_cast<std::ptrdiff_t>(L), [](std::uint8_t y) { return y != 0; });
    }
  }
  return SubsequenceSet(std::move(windows), std::move(starts), config, std::move(labels));
}

std::vector<std::span<const double>> multi_length_view(const SubsequenceSet& set, std::size_t i) {
  std::span<const double> w = set.window(i);
  std::vector<std::span<const double>> out;
  for (std::size_t p = 0; p < set.config().scale_count(); ++p) out.push_back(w.first(set.config().scale_length(p)));
  return out;
}

}  // namespace subdetector
