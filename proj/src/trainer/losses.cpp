#include "subdetector/trainer/losses.hpp"

#include "subdetector/errors.hpp"

namespace subdetector {

void LossWeights::validate() const {
  if (!(lambda >= 0 && mu >= 0 && w_norm >= 0 && w_unlabeled >= 0)) throw ConfigError("loss weights must be non-negative");
}

std::vector<double> hsc_weights(std::span<const std::uint8_t> y, std::span<const std::uint8_t> labeled_normal,
                                const LossWeights& weights) {
  std::vector<double> w(y.size(), weights.w_unlabeled);
  for (std::size_t i = 0; i < y.size() && i < labeled_normal.size(); ++i) {
    if (labeled_normal[i] && !y[i]) w[i] = weights.w_norm;
  }
  return w;
}

grad::Var hsc_loss(grad::Var scores, std::span<const std::uint8_t> y, std::span<const double> weights) {
  const std::size_t n = scores.size();
  if (scores.shape().size() != 1 || y.size() != n || weights.size() != n) {
    throw DimensionError("hsc_loss: scores, labels and weights must have one entry per window");
  }
  grad::Tape& tape = *scores.tape();
  grad::DenseArray normal({n}), anomal({n});
  for (std::size_t i = 0; i < n; ++i) {
    normal[i] = y[i] ? 0.0 : weights[i];
    anomal[i] = y[i] ? weights[i] : 0.0;
  }
  grad::Var likelihood = grad::clamp_max(grad::exp(-scores), 1.0 - kHscClamp);
  grad::Var per = tape.constant(std::move(normal)) * scores - tape.constant(std::move(anomal)) * grad::log(1.0 - likelihood);
  return grad::mean(per);
}

grad::Var reconstruction_loss(grad::Var recon, std::span<const double> target) {
  if (recon.size() != target.size()) throw DimensionError("reconstruction_loss: target size mismatch");
  grad::DenseArray t(recon.shape(), std::vector<double>(target.begin(), target.end()));
  return grad::mean(grad::square(recon - recon.tape()->constant(std::move(t))));
}

grad::Var length_loss(grad::Var lengths, const EdgeIndex& edges) {
  if (edges.edges() == 0) throw ContractViolation("length_loss: graph has no edges");
  grad::Var diff = grad::gather_rows(lengths, edges.dst) - grad::gather_rows(lengths, edges.src);
  return grad::sum(grad::square(diff)) * (1.0 / static_cast<double>(edges.edges()));
}

}  // namespace subdetector
