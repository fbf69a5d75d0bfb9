#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subdetector/series/time_series.hpp"

namespace subdetector::cli {

enum class SyntheticAnomaly { Spike, Warp, Flip };

std::string to_string(SyntheticAnomaly type);
SyntheticAnomaly parse_synthetic_anomaly(const std::string& name);

struct SyntheticConfig {
  std::size_t length = 8000;
  std::size_t period = 100;
  double noise = 0.05;
  std::size_t anomalies = 5;
  std::vector<SyntheticAnomaly> types{SyntheticAnomaly::Spike, SyntheticAnomaly::Warp, SyntheticAnomaly::Flip};
  // Anomaly lengths are drawn uniformly from [min_length, max_length].
  std::size_t min_length = 100;
  std::size_t max_length = 400;
  std::uint64_t seed = 0;

  void validate() const;
};

// Two-harmonic periodic signal plus Gaussian noise. Anomalies cycle through the
// enabled types, sit in disjoint slots and are labeled point by point:
//   spike  a burst of alternating-sign spikes every few steps
//   warp   the segment plays at a different local frequency (phase continuous)
//   flip   the segment is mirrored around zero
TimeSeries make_synthetic(const SyntheticConfig& config);

}  // namespace subdetector::cli
