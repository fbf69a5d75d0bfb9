#include <cmath>

#include "subdetector/errors.hpp"
#include "subdetector/proximity/proximity.hpp"

namespace subdetector {

std::vector<double> znorm(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double var = 0.0;
  for (double v : x) var += (v - m) * (v - m);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(x.size(), 0.0);
  if (sd < kDegenerateStd) return out;
  for (std::size_t t = 0; t < x.size(); ++t) out[t] = (x[t] - m) / sd;
  return out;
}

DistanceProfile::DistanceProfile(const SubsequenceSet& set)
    : set_(&set), n_(set.count()), length_(set.length()), packed_(0) {
  for (std::size_t p = 0; p < set.config().scale_count(); ++p) {
    scales_.push_back(set.config().scale_length(p));
    offsets_.push_back(packed_);
    packed_ += scales_.back();
  }
  zprefix_.resize(n_ * packed_);
  for (std::size_t i = 0; i < n_; ++i) pack(set.window(i), std::span<double>(zprefix_).subspan(i * packed_, packed_));
}

void DistanceProfile::pack(std::span<const double> window, std::span<double> dst) const {
  for (std::size_t p = 0; p < scales_.size(); ++p) {
    std::vector<double> z = znorm(window.first(scales_[p]));
    std::copy(z.begin(), z.end(), dst.begin() + static_cast<std::ptrdiff_t>(offsets_[p]));
  }
}

void DistanceProfile::measures(std::span<const double> a, std::span<const double> za, std::span<const double> b,
                               std::span<const double> zb, std::span<double> out) const {
  const std::size_t P1 = scales_.size();
  double s = 0.0;
  std::size_t t = 0;
  for (std::size_t p = 0; p < P1; ++p) {
    for (; t < scales_[p]; ++t) {
      const double d = a[t] - b[t];
      s += d * d;
    }
    out[p] = std::sqrt(s);
  }
  for (std::size_t p = 0; p < P1; ++p) {
    const double* x = za.data() + offsets_[p];
    const double* y = zb.data() + offsets_[p];
    double z = 0.0;
    for (std::size_t k = 0; k < scales_[p]; ++k) {
      const double d = x[k] - y[k];
      z += d * d;
    }
    out[P1 + p] = std::sqrt(z);
  }
}

void DistanceProfile::pair(std::size_t i, std::size_t j, std::span<double> out) const {
  if (i >= n_ || j >= n_) throw ContractViolation("DistanceProfile::pair: index out of range");
  if (out.size() < measure_count()) throw DimensionError("DistanceProfile::pair: output too small");
  std::span<const double> z(zprefix_);
  measures(set_->window(i), z.subspan(i * packed_, packed_), set_->window(j), z.subspan(j * packed_, packed_), out);
}

double DistanceProfile::euclidean(std::size_t i, std::size_t j, std::size_t p) const {
  std::vector<double> out(measure_count());
  pair(i, j, out);
  return out.at(p);
}

double DistanceProfile::znormalized(std::size_t i, std::size_t j, std::size_t p) const {
  std::vector<double> out(measure_count());
  pair(i, j, out);
  return out.at(scales_.size() + p);
}

void DistanceProfile::against(std::span<const double> window, std::size_t j, std::span<double> out) const {
  if (window.size() != length_) throw DimensionError("DistanceProfile::against: window length mismatch");
  if (j >= n_) throw ContractViolation("DistanceProfile::against: index out of range");
  std::vector<double> zw(packed_);
  pack(window, zw);
  std::span<const double> z(zprefix_);
  measures(window, zw, set_->window(j), z.subspan(j * packed_, packed_), out);
}

DistanceProfile pairwise_distances(const SubsequenceSet& set) {
  if (set.count() < 2) throw DataError("pairwise distances need at least two windows");
  return DistanceProfile(set);
}

}  // namespace subdetector
