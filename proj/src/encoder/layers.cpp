#include "subdetector/encoder/layers.hpp"

#include "subdetector/errors.hpp"
#include "subdetector/gradcore/adam.hpp"

namespace subdetector {

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
    : weight(name + ".weight", grad::uniform_init({in, out}, in, rng)),
      bias(name + ".bias", grad::DenseArray({out}, 0.0)) {}

grad::Var Linear::forward(grad::Tape& tape, grad::Var x, bool trainable) {
  return grad::matmul(x, tape.param(weight, trainable)) + tape.param(bias, trainable);
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

Mlp::Mlp(const std::string& name, const std::vector<std::size_t>& widths, std::mt19937_64& rng) {
  if (widths.size() < 2) throw ConfigError(name + ": an MLP needs at least input and output widths");
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    layers.emplace_back(name + "." + std::to_string(k), widths[k], widths[k + 1], rng);
  }
}

grad::Var Mlp::forward(grad::Tape& tape, grad::Var x, bool trainable) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    x = layers[k].forward(tape, x, trainable);
    if (k + 1 < layers.size()) x = grad::relu(x);
  }
  return x;
}

void Mlp::collect(ParamList& out) {
  for (Linear& l : layers) l.collect(out);
}

}  // namespace subdetector
