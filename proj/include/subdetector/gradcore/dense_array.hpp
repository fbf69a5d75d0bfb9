#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace subdetector::grad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Eigen's vectorized kernels peel loops by pointer alignment, so results can
// differ in the last bits with where a buffer lands. Fixing the alignment keeps
// runs bit-reproducible within and across processes.
template <class T>
struct CacheAligned {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  CacheAligned() = default;
  template <class U>
  CacheAligned(const CacheAligned<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  // Default-insertion leaves doubles uninitialized; see DenseArray::uninitialized.
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
  friend bool operator==(const CacheAligned&, const CacheAligned&) { return true; }
};

using Storage = std::vector<double, CacheAligned<double>>;

// Tape buffers of tens of megabytes are freed and reallocated every step. glibc
// hands blocks that size straight back to the kernel, so each step would fault
// in and zero them again. Call once at startup to keep them in the heap.
void retain_freed_memory();

// Row-major array of 64-bit floats. A rank-0 array holds one scalar.
class DenseArray {
 public:
  DenseArray() : data_(1, 0.0) {}
  explicit DenseArray(Shape shape, double fill = 0.0);
  DenseArray(Shape shape, std::vector<double> data);

  // Contents are indeterminate; for outputs every element of which is written.
  static DenseArray uninitialized(Shape shape);
  static DenseArray scalar(double value);
  static DenseArray vector(std::vector<double> values);
  // rows x cols from a nested initializer list; handy in tests.
  static DenseArray matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  Storage& storage() { return data_; }
  const Storage& storage() const { return data_; }
  std::vector<double> to_vector() const { return {data_.begin(), data_.end()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 3-D element access, row-major.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  double item() const;
  void fill(double value);
  DenseArray reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const DenseArray& a, const DenseArray& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Storage data_;
};

}  // namespace subdetector::grad
