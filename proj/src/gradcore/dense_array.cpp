#include "subdetector/gradcore/dense_array.hpp"

#include <cmath>
#include <sstream>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "subdetector/errors.hpp"

namespace subdetector::grad {

void retain_freed_memory() {
#ifdef __GLIBC__
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

static void check_dims(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("DenseArray: zero-sized dimension in " + shape_string(shape));
  }
}

DenseArray::DenseArray(Shape shape, double fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_size(shape_), fill);
}

DenseArray::DenseArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  check_dims(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw DimensionError("DenseArray: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

DenseArray DenseArray::uninitialized(Shape shape) {
  check_dims(shape);
  DenseArray out;
  out.data_ = Storage(shape_size(shape));
  out.shape_ = std::move(shape);
  return out;
}

DenseArray DenseArray::scalar(double value) { return DenseArray(Shape{}, std::vector<double>{value}); }

DenseArray DenseArray::vector(std::vector<double> values) {
  Shape s{values.size()};
  return DenseArray(std::move(s), std::move(values));
}

DenseArray DenseArray::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseArray::matrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseArray({r, c}, std::move(data));
}

double DenseArray::item() const {
  if (data_.size() != 1) {
    throw DimensionError("DenseArray::item: array of shape " + shape_string(shape_) + " is not a scalar");
  }
  return data_[0];
}

void DenseArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

DenseArray DenseArray::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(shape_) + " as " + shape_string(shape));
  }
  DenseArray out = *this;
  out.shape_ = std::move(shape);
  return out;
}

bool DenseArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace subdetector::grad
