#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "subdetector/gradcore/tape.hpp"

namespace subdetector::grad {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with per-parameter moment buffers keyed by parameter address, so the
// same optimizer can step disjoint parameter groups.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update to every param in `params`, then zeroes their gradients.
  // Throws TrainingError naming the first parameter whose gradient is not finite;
  // no parameter is modified in that case.
  void step(const std::vector<TrainableParam*>& params, double learning_rate);

  std::uint64_t steps_taken(const TrainableParam& p) const;

 private:
  struct Moments {
    DenseArray m, v;
    std::uint64_t t = 0;
  };
  AdamConfig config_;
  std::unordered_map<const TrainableParam*, Moments> state_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
DenseArray uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace subdetector::grad
