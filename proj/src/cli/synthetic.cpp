#include "subdetector/cli/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "subdetector/errors.hpp"

namespace subdetector::cli {

std::string to_string(SyntheticAnomaly type) {
  switch (type) {
    case SyntheticAnomaly::Spike: return "spike";
    case SyntheticAnomaly::Warp: return "warp";
    case SyntheticAnomaly::Flip: return "flip";
  }
  return "unknown";
}

SyntheticAnomaly parse_synthetic_anomaly(const std::string& name) {
  if (name == "spike") return SyntheticAnomaly::Spike;
  if (name == "warp") return SyntheticAnomaly::Warp;
  if (name == "flip") return SyntheticAnomaly::Flip;
  throw ConfigError("unknown synthetic anomaly type '" + name + "' (expected spike, warp or flip)");
}

void SyntheticConfig::validate() const {
  if (period < 2) throw ConfigError("synthetic period must be at least 2");
  if (length < 2 * period) throw ConfigError("synthetic series must span at least two periods");
  if (!(noise >= 0)) throw ConfigError("synthetic noise must be non-negative");
  if (anomalies > 0) {
    if (types.empty()) throw ConfigError("no synthetic anomaly types enabled");
    if (min_length == 0 || min_length > max_length) throw ConfigError("synthetic anomaly lengths must satisfy 0 < min <= max");
    // Each anomaly gets its own slot with a one-period margin on both sides.
    if (length / anomalies < max_length + 2 * period) {
      throw ConfigError("synthetic series too short for " + std::to_string(anomalies) + " anomalies of length " +
                        std::to_string(max_length));
    }
  }
}

TimeSeries make_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double w = 2.0 * std::numbers::pi / static_cast<double>(config.period);
  auto signal = [](double phase) { return std::sin(phase) + 0.5 * std::sin(2.0 * phase + 0.7); };

  TimeSeries s;
  s.name = "synthetic";
  s.period = config.period;
  s.values.resize(config.length);
  for (std::size_t t = 0; t < config.length; ++t) s.values[t] = signal(w * static_cast<double>(t));
  std::vector<std::uint8_t> labels(config.length, 0);

  const std::size_t slot = config.anomalies ? config.length / config.anomalies : 0;
  for (std::size_t a = 0; a < config.anomalies; ++a) {
    const std::size_t len = std::uniform_int_distribution<std::size_t>(config.min_length, config.max_length)(rng);
    const std::size_t lo = a * slot + config.period, hi = (a + 1) * slot - config.period - len;
    const std::size_t begin = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    const SyntheticAnomaly type = config.types[a % config.types.size()];
    switch (type) {
      case SyntheticAnomaly::Spike: {
        const std::size_t gap = std::uniform_int_distribution<std::size_t>(5, 10)(rng);
        std::uniform_real_distribution<double> height(2.0, 3.0);
        double sign = 1.0;
        for (std::size_t t = begin; t < begin + len; t += gap, sign = -sign) s.values[t] += sign * height(rng);
        break;
      }
      case SyntheticAnomaly::Warp: {
        // Local frequency scaled by 0.5-0.7 or 1.4-1.8, phase continuous at the start.
        const bool slower = std::bernoulli_distribution(0.5)(rng);
        const double f = slower ? std::uniform_real_distribution<double>(0.5, 0.7)(rng)
                                : std::uniform_real_distribution<double>(1.4, 1.8)(rng);
        const double phase0 = w * static_cast<double>(begin);
        for (std::size_t t = begin; t < begin + len; ++t) s.values[t] = signal(phase0 + f * w * static_cast<double>(t - begin));
        break;
      }
      case SyntheticAnomaly::Flip:
        for (std::size_t t = begin; t < begin + len; ++t) s.values[t] = -s.values[t];
        break;
    }
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(begin), labels.begin() + static_cast<std::ptrdiff_t>(begin + len), 1);
  }
  for (double& v : s.values) v += config.noise * gauss(rng);
  s.labels = std::move(labels);
  return s;
}

}  // namespace subdetector::cli
