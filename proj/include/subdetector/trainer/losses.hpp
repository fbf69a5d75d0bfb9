#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "subdetector/dagnn/dagnn.hpp"
#include "subdetector/gradcore/ops.hpp"

namespace subdetector {

struct LossWeights {
  double lambda = 1.0;       // reconstruction regularizer
  double mu = 0.2;           // length-embedding smoothness
  double w_norm = 2.0;       // windows known to be normal
  double w_unlabeled = 1.0;  // everything else

  void validate() const;
};

constexpr double kHscClamp = 1e-7;

// Per-window weights: w_norm where labeled_normal is set and y = 0, w_unlabeled otherwise.
std::vector<double> hsc_weights(std::span<const std::uint8_t> y, std::span<const std::uint8_t> labeled_normal,
                                const LossWeights& weights);

// (1/N) sum_i w_i [(1 - y_i) s_i - y_i log(1 - min(exp(-s_i), 1 - 1e-7))].
grad::Var hsc_loss(grad::Var scores, std::span<const std::uint8_t> y, std::span<const double> weights);

// Mean squared reconstruction error over all entries of recon vs. target.
grad::Var reconstruction_loss(grad::Var recon, std::span<const double> target);

// (1/|E|) sum over edges j -> i of |W_i - W_j|^2.
grad::Var length_loss(grad::Var lengths, const EdgeIndex& edges);

}  // namespace subdetector
