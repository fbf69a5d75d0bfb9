#include "subdetector/gradcore/tape.hpp"

#include "subdetector/errors.hpp"

namespace subdetector::grad {

TrainableParam::TrainableParam(std::string n, DenseArray v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0.0) {}

const DenseArray& Var::value() const {
  if (!tape_) throw ContractViolation("Var::value on an empty handle");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v, const char* where) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw ContractViolation(std::string(where) + ": variable does not belong to this tape");
  }
}

Var Tape::constant(DenseArray value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::input(DenseArray value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(TrainableParam& p, bool trainable) {
  if (!trainable) return constant(p.value);
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  if (p.grad.shape() != p.value.shape()) p.grad = DenseArray(p.value.shape(), 0.0);
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  Var v = push(std::move(n));
  param_nodes_.emplace(&p, v.id_);
  return v;
}

Var Tape::record(DenseArray value, std::initializer_list<Var> inputs, Backprop backprop) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    check_owned(in, "Tape::record");
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backprop = std::move(backprop);
  return push(std::move(n));
}

Var Tape::record(DenseArray value, const std::vector<Var>& inputs, Backprop backprop) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    check_owned(in, "Tape::record");
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backprop = std::move(backprop);
  return push(std::move(n));
}

DenseArray& Tape::accumulator(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = DenseArray(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

DenseArray& Tape::accumulator(std::size_t id, bool& fresh) {
  Node& n = nodes_[id];
  fresh = !n.has_grad;
  if (fresh) {
    n.grad = DenseArray::uninitialized(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  check_owned(loss, "Tape::backward");
  if (loss.size() != 1) {
    throw ContractViolation("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
  }
  DenseArray seed(loss.shape(), 1.0);
  backward(loss, seed);
}

void Tape::backward(Var output, const DenseArray& seed) {
  check_owned(output, "Tape::backward");
  if (seed.shape() != output.shape()) {
    throw DimensionError("backward: seed shape " + shape_string(seed.shape()) + " does not match output " +
                         shape_string(output.shape()));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = DenseArray();
  }
  if (!nodes_[output.id_].requires_grad) return;
  accumulator(output.id_) = seed;

  for (std::size_t i = output.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backprop) continue;
    n.backprop(*this, i);
    // Intermediate gradients are dead once propagated.
    nodes_[i].grad = DenseArray();
    nodes_[i].has_grad = false;
  }

  for (auto& n : nodes_) {
    if (!n.param || !n.has_grad) continue;
    auto dst = n.param->grad.data();
    auto src = n.grad.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

bool Tape::has_grad(Var v) const {
  check_owned(v, "Tape::has_grad");
  return nodes_[v.id_].has_grad;
}

const DenseArray& Tape::grad(Var v) const {
  check_owned(v, "Tape::grad");
  const Node& n = nodes_[v.id_];
  if (!n.has_grad) throw ContractViolation("Tape::grad: no gradient recorded for this variable");
  return n.grad;
}

}  // namespace subdetector::grad
