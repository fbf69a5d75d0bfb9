#pragma once

#include <random>
#include <vector>

#include "subdetector/encoder/layers.hpp"

namespace subdetector {

struct TcnConfig {
  std::size_t layers = 3;
  std::size_t kernel_size = 3;
  std::vector<std::size_t> dilations{1, 2, 4};
  std::size_t hidden = 64;
  // Per-time-step layer normalization over channels after each ReLU.
  bool normalize = true;

  std::size_t receptive_field() const;
  void validate() const;
};

// Causal dilated convolution stack: conv -> ReLU -> layer norm, per layer.
class Tcn {
 public:
  Tcn() = default;
  Tcn(const TcnConfig& config, std::mt19937_64& rng);

  // x: [N, L, 1] -> [N, L, hidden]. Output at t depends on x[:, 0..t] only.
  grad::Var forward(grad::Tape& tape, grad::Var x, bool trainable = true);
  void collect(ParamList& out);
  const TcnConfig& config() const { return config_; }

  struct Layer {
    grad::TrainableParam weight;  // [kernel, in, out]
    grad::TrainableParam bias;    // [out]
    grad::TrainableParam gain;    // [out]
    grad::TrainableParam shift;   // [out]
  };
  std::vector<Layer> layers;

 private:
  TcnConfig config_;
};

// Inference helper: windows [N x L] row-major -> R [N, L, hidden].
grad::DenseArray tcn_forward(Tcn& tcn, std::span<const double> windows, std::size_t n, std::size_t length);

// [mean; population variance; max; min] over axis 1 of R: [N, l, d] -> [N, 4d].
grad::Var stats_pool(grad::Var r);

// Maps each window time step to a row of a shared representation matrix:
// row(i, t) = t < split[i] ? head[i] + t : tail[i] + t.
struct RowPlan {
  std::vector<std::size_t> split, head, tail;
  std::size_t size() const { return split.size(); }
  std::size_t row(std::size_t i, std::size_t t) const { return t < split[i] ? head[i] + t : tail[i] + t; }
};

// Multi-scale statistics pooling over prefixes.
// rows: [R, d]; returns [N, S, 4d] where entry (i, s) pools rows(i, 0 .. lengths[s]).
grad::Var multiscale_stats(grad::Var rows, const RowPlan& plan, std::span<const std::size_t> lengths);

}  // namespace subdetector
