#include "subdetector/trainer/injection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "subdetector/errors.hpp"

namespace subdetector {
namespace {

double window_std(std::span<const double> w, double* mean_out = nullptr) {
  double m = 0.0;
  for (double v : w) m += v;
  m /= static_cast<double>(w.size());
  double var = 0.0;
  for (double v : w) var += (v - m) * (v - m);
  if (mean_out) *mean_out = m;
  return std::sqrt(var / static_cast<double>(w.size()));
}

// Linear interpolation at a fractional index, clamped to the window.
double sample_at(std::span<const double> w, double pos) {
  pos = std::clamp(pos, 0.0, static_cast<double>(w.size() - 1));
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= w.size()) return w.back();
  const double f = pos - static_cast<double>(k);
  return w[k] + f * (w[k + 1] - w[k]);
}

}  // namespace

const std::vector<InjectionType>& all_injection_types() {
  static const std::vector<InjectionType> all{InjectionType::SpikeDip, InjectionType::Resizing,  InjectionType::Warping,
                                              InjectionType::Noise,    InjectionType::LeftRight, InjectionType::UpDown};
  return all;
}

std::string to_string(InjectionType type) {
  switch (type) {
    case InjectionType::SpikeDip: return "spike_dip";
    case InjectionType::Resizing: return "resizing";
    case InjectionType::Warping: return "warping";
    case InjectionType::Noise: return "noise";
    case InjectionType::LeftRight: return "left_right";
    case InjectionType::UpDown: return "up_down";
  }
  return "unknown";
}

InjectionType parse_injection_type(const std::string& name) {
  for (InjectionType t : all_injection_types())
    if (to_string(t) == name) return t;
  throw ConfigError("unknown injection type '" + name + "'");
}

void InjectionConfig::validate() const {
  if (!(rate >= 0.0 && rate <= 0.3)) throw ConfigError("injection rate must lie in [0, 0.3]");
  if (rate > 0.0 && types.empty()) throw ConfigError("at least one injection type must be enabled");
  if (!(spike_min > 0.0 && spike_max >= spike_min)) throw ConfigError("spike magnitudes must satisfy 0 < min <= max");
  if (resize_factors.empty()) throw ConfigError("at least one resize factor is required");
  for (double f : resize_factors)
    if (!(f > 0.0)) throw ConfigError("resize factors must be positive");
  if (!(warp_min >= 0.0 && warp_max >= warp_min && warp_max < 1.0 / std::numbers::pi)) {
    throw ConfigError("warp displacement must satisfy 0 <= min <= max < 1/pi of the window");
  }
  if (!(noise_scale >= 0.0)) throw ConfigError("noise scale must be non-negative");
}

std::vector<double> corrupt(std::span<const double> window, InjectionType type, const InjectionConfig& config,
                            std::mt19937_64& rng) {
  const std::size_t L = window.size();
  std::vector<double> out(window.begin(), window.end());
  double mean = 0.0;
  double sd = window_std(window, &mean);
  if (sd < 1e-8) sd = 1.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (type) {
    case InjectionType::SpikeDip: {
      std::uniform_int_distribution<std::size_t> at(0, L - 1);
      const std::size_t t = at(rng);
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const double m = config.spike_min + (config.spike_max - config.spike_min) * unit(rng);
      out[t] += sign * m * sd;
      break;
    }
    case InjectionType::Resizing: {
      const std::size_t half = std::max<std::size_t>(1, L / 2);
      std::uniform_int_distribution<std::size_t> at(0, L - half);
      const std::size_t s = at(rng);
      std::uniform_int_distribution<std::size_t> pick(0, config.resize_factors.size() - 1);
      const double f = config.resize_factors[pick(rng)];
      for (std::size_t k = 0; k < half; ++k) out[s + k] = sample_at(window, static_cast<double>(s) + f * static_cast<double>(k));
      break;
    }
    case InjectionType::Warping: {
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const double a = sign * (config.warp_min + (config.warp_max - config.warp_min) * unit(rng)) * static_cast<double>(L);
      const double span = static_cast<double>(std::max<std::size_t>(L - 1, 1));
      for (std::size_t t = 0; t < L; ++t) {
        const double x = static_cast<double>(t);
        out[t] = sample_at(window, x + a * std::sin(std::numbers::pi * x / span));
      }
      break;
    }
    case InjectionType::Noise: {
      std::normal_distribution<double> noise(0.0, config.noise_scale * sd);
      for (double& v : out) v += noise(rng);
      break;
    }
    case InjectionType::LeftRight:
      std::reverse(out.begin(), out.end());
      break;
    case InjectionType::UpDown:
      for (double& v : out) v = 2.0 * mean - v;
      break;
  }
  return out;
}

InjectedBatch sample_injections(const SubsequenceSet& set, const InjectionConfig& config, std::mt19937_64& rng) {
  config.validate();
  InjectedBatch batch;
  if (config.rate == 0.0) return batch;
  const std::size_t n = set.count();
  const std::size_t m = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(config.rate * static_cast<double>(n))), 1, n);
  // partial Fisher-Yates keeps the draw independent of std::sample's implementation
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(order[k], order[pick(rng)]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::uniform_int_distribution<std::size_t> kind(0, config.types.size() - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t src = order[k];
    const InjectionType type = config.types[kind(rng)];
    std::vector<double> w = corrupt(set.window(src), type, config, rng);
    batch.sources.push_back(src);
    batch.types.push_back(type);
    batch.windows.insert(batch.windows.end(), w.begin(), w.end());
  }
  return batch;
}

AugmentedSet inject(const SubsequenceSet& set, const InjectionConfig& config) {
  std::mt19937_64 rng(config.seed);
  InjectedBatch batch = sample_injections(set, config, rng);
  std::vector<double> windows(set.matrix().begin(), set.matrix().end());
  windows.insert(windows.end(), batch.windows.begin(), batch.windows.end());
  std::vector<std::size_t> starts(set.starts().begin(), set.starts().end());
  for (std::size_t src : batch.sources) starts.push_back(set.starts()[src]);
  std::vector<std::uint8_t> y(set.count(), 0);
  y.resize(set.count() + batch.count(), 1);
  return AugmentedSet{SubsequenceSet(std::move(windows), std::move(starts), set.config()), std::move(y), std::move(batch)};
}

}  // namespace subdetector
