#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "subdetector/gradcore/dense_array.hpp"

namespace subdetector::grad {

// A named trainable value with its accumulated gradient.
struct TrainableParam {
  TrainableParam() = default;
  TrainableParam(std::string name, DenseArray value);

  std::string name;
  DenseArray value;
  DenseArray grad;

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const DenseArray& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records primitive operations in execution order and replays them backward.
//
// Leaves are constants (never differentiated), inputs (differentiable, grad read
// back via grad()), and params (grad accumulated into TrainableParam::grad).
// Intermediate gradients are released as soon as they have been propagated.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(DenseArray value);
  Var constant(double value) { return constant(DenseArray::scalar(value)); }
  Var input(DenseArray value);
  // A frozen param is recorded as a constant, so no gradient reaches it.
  Var param(TrainableParam& p, bool trainable = true);

  // Primitive authors: append a node computed from `inputs`. The backprop closure
  // is kept only when at least one input requires a gradient.
  Var record(DenseArray value, std::initializer_list<Var> inputs, Backprop backprop);
  Var record(DenseArray value, const std::vector<Var>& inputs, Backprop backprop);

  // Reverse sweep from a scalar loss.
  void backward(Var loss);
  // Reverse sweep from an arbitrary node with an explicit upstream gradient.
  void backward(Var output, const DenseArray& seed);

  bool has_grad(Var v) const;
  const DenseArray& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

  // Accessors used inside backprop closures.
  const DenseArray& value(std::size_t id) const { return nodes_[id].value; }
  const DenseArray& upstream(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer for `id`, allocated as zeros on first use.
  DenseArray& accumulator(std::size_t id);
  // As above, but a first-use buffer is left uninitialized and `fresh` is set;
  // the caller must then assign every element instead of adding.
  DenseArray& accumulator(std::size_t id, bool& fresh);

 private:
  struct Node {
    DenseArray value;
    DenseArray grad;
    bool has_grad = false;
    bool requires_grad = false;
    TrainableParam* param = nullptr;
    Backprop backprop;
  };

  Var push(Node node);
  void check_owned(Var v, const char* where) const;

  std::vector<Node> nodes_;
  std::unordered_map<const TrainableParam*, std::size_t> param_nodes_;
};

}  // namespace subdetector::grad
