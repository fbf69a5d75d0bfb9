#include "subdetector/encoder/length_selection.hpp"

#include "subdetector/errors.hpp"

namespace subdetector {

grad::Var select_length(grad::Var zs, grad::Var weights) {
  const grad::Shape& zshape = zs.shape();
  if (zshape.size() != 3 || weights.shape() != grad::Shape{zshape[0], zshape[1]}) {
    throw DimensionError("select_length: weights " + grad::shape_string(weights.shape()) +
                         " do not match representations " + grad::shape_string(zshape));
  }
  grad::Var p = grad::reshape(grad::softmax_last(weights), {zshape[0], zshape[1], 1});
  return grad::sum_axis(p * zs, 1);
}

grad::Var average_lengths(grad::Var zs) { return grad::mean_axis(zs, 1); }

grad::Var single_length(grad::Var zs, std::size_t s) {
  const grad::Shape& zshape = zs.shape();
  return grad::reshape(grad::slice(zs, 1, s, s + 1), {zshape[0], zshape[2]});
}

std::size_t nearest_scale(const WindowConfig& config, std::size_t length) {
  std::size_t best = 0;
  auto gap = [length](std::size_t l) { return l > length ? l - length : length - l; };
  for (std::size_t p = 1; p < config.scale_count(); ++p) {
    if (gap(config.scale_length(p)) < gap(config.scale_length(best))) best = p;
  }
  return best;
}

}  // namespace subdetector
