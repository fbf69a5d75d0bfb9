#include "subdetector/gradcore/adam.hpp"

#include <cmath>

#include "subdetector/errors.hpp"

namespace subdetector::grad {

void Adam::step(const std::vector<TrainableParam*>& params, double learning_rate) {
  for (const TrainableParam* p : params) {
    if (!p->grad.all_finite()) throw TrainingError("non-finite gradient in parameter '" + p->name + "'");
  }
  for (TrainableParam* p : params) {
    Moments& s = state_[p];
    if (s.t == 0) {
      s.m = DenseArray(p->value.shape(), 0.0);
      s.v = DenseArray(p->value.shape(), 0.0);
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(s.t));
    auto x = p->value.data();
    auto g = p->grad.data();
    auto m = s.m.data();
    auto v = s.v.data();
    for (std::size_t k = 0; k < x.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      x[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
    }
    p->zero_grad();
  }
}

std::uint64_t Adam::steps_taken(const TrainableParam& p) const {
  auto it = state_.find(&p);
  return it == state_.end() ? 0 : it->second.t;
}

DenseArray uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseArray out(std::move(shape));
  for (double& v : out.data()) v = dist(rng);
  return out;
}

}  // namespace subdetector::grad
