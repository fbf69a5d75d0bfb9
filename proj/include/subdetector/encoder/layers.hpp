#pragma once

#include <random>
#include <string>
#include <vector>

#include "subdetector/gradcore/ops.hpp"

namespace subdetector {

using ParamList = std::vector<grad::TrainableParam*>;

// y = x W + b with W: [in, out].
struct Linear {
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);

  grad::Var forward(grad::Tape& tape, grad::Var x, bool trainable = true);
  void collect(ParamList& out);

  grad::TrainableParam weight, bias;
};

// Stack of Linear layers with ReLU between them (none after the last).
struct Mlp {
  Mlp() = default;
  Mlp(const std::string& name, const std::vector<std::size_t>& widths, std::mt19937_64& rng);

  grad::Var forward(grad::Tape& tape, grad::Var x, bool trainable = true);
  void collect(ParamList& out);
  std::size_t in_dim() const { return layers.front().weight.value.dim(0); }
  std::size_t out_dim() const { return layers.back().weight.value.dim(1); }

  std::vector<Linear> layers;
};

}  // namespace subdetector
