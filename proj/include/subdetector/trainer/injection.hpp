#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "subdetector/series/windows.hpp"

namespace subdetector {

enum class InjectionType { SpikeDip, Resizing, Warping, Noise, LeftRight, UpDown };

const std::vector<InjectionType>& all_injection_types();
std::string to_string(InjectionType type);
InjectionType parse_injection_type(const std::string& name);

struct InjectionConfig {
  double rate = 0.1;
  std::vector<InjectionType> types = all_injection_types();
  double spike_min = 3.0, spike_max = 6.0;  // multiples of the window std
  std::vector<double> resize_factors{0.5, 2.0};
  double warp_min = 0.1, warp_max = 0.2;  // peak displacement as a fraction of L
  double noise_scale = 0.3;               // noise std as a fraction of the window std
  std::uint64_t seed = 0;

  void validate() const;
};

// Corrupted copy of one window.
std::vector<double> corrupt(std::span<const double> window, InjectionType type, const InjectionConfig& config,
                            std::mt19937_64& rng);

struct InjectedBatch {
  std::vector<std::size_t> sources;  // original window per injected copy
  std::vector<InjectionType> types;
  std::vector<double> windows;       // copies x L, row-major

  std::size_t count() const { return sources.size(); }
};

// Picks round(rate * N) distinct windows (at least one when rate > 0) and corrupts
// each with a uniformly chosen enabled type.
InjectedBatch sample_injections(const SubsequenceSet& set, const InjectionConfig& config, std::mt19937_64& rng);

struct AugmentedSet {
  SubsequenceSet set;         // originals followed by injected copies
  std::vector<std::uint8_t> y;  // 1 for injected copies
  InjectedBatch batch;
};

// Originals are copied unchanged; copies take the start position of their source.
AugmentedSet inject(const SubsequenceSet& set, const InjectionConfig& config);

}  // namespace subdetector
