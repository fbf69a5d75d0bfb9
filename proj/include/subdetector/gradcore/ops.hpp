#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "subdetector/gradcore/tape.hpp"

// Differentiable primitives. Every function records one node on the tape that
// owns its operands and throws DimensionError (naming the primitive) when the
// operand shapes do not conform.
namespace subdetector::grad {

// Elementwise binary ops with NumPy-style broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator+(Var a, double c);
Var operator-(Var a, double c);
Var operator*(Var a, double c);
Var operator/(Var a, double c);
Var operator+(double c, Var a);
Var operator-(double c, Var a);
Var operator*(double c, Var a);
Var operator-(Var a);

// Elementwise unary ops.
Var exp(Var x);
Var log(Var x);
Var sqrt(Var x);
Var square(Var x);
Var relu(Var x);
Var softplus(Var x);
// min(x, ceiling); the gradient passes only where x < ceiling.
Var clamp_max(Var x, double ceiling);

// Reductions.
Var sum(Var x);
Var mean(Var x);
Var sum_axis(Var x, std::size_t axis);
Var mean_axis(Var x, std::size_t axis);
// Population variance along an axis.
Var var_axis(Var x, std::size_t axis);
// Max/min route the gradient to the first attaining index.
Var max_axis(Var x, std::size_t axis);
Var min_axis(Var x, std::size_t axis);
Var softmax_last(Var x);

// Linear algebra and structure.
Var matmul(Var a, Var b);
Var reshape(Var x, Shape shape);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var gather_rows(Var x, std::span<const std::size_t> rows);
// Segment reductions over the leading axis. Segment s spans rows
// [offsets[s], offsets[s+1]); offsets has one more entry than there are segments.
Var segment_sum(Var x, std::span<const std::size_t> offsets);
Var segment_mean(Var x, std::span<const std::size_t> offsets);
Var segment_max(Var x, std::span<const std::size_t> offsets);
Var segment_min(Var x, std::span<const std::size_t> offsets);

// Neural-network primitives.
// x: [N, L, Cin], weight: [K, Cin, Cout], bias: [Cout] -> [N, L, Cout].
// Output at time t sees inputs t - (K-1-k)*dilation for k = 0..K-1, zero-padded on the left.
Var causal_conv1d(Var x, Var weight, Var bias, std::size_t dilation);
// Normalizes over the last axis, then applies per-channel gain and bias.
Var layer_norm_last(Var x, Var gain, Var bias, double eps = 1e-5);

}  // namespace subdetector::grad
