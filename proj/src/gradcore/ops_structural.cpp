#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "subdetector/errors.hpp"
#include "subdetector/gradcore/ops.hpp"

namespace subdetector::grad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMut = Eigen::Map<RowMatrix>;
using MapConst = Eigen::Map<const RowMatrix>;

// (outer, n, inner) decomposition of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
  Shape reduced;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                         shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t k = 0; k < axis; ++k) s.outer *= shape[k];
  s.n = shape[axis];
  for (std::size_t k = axis + 1; k < shape.size(); ++k) s.inner *= shape[k];
  s.reduced = shape;
  s.reduced.erase(s.reduced.begin() + static_cast<std::ptrdiff_t>(axis));
  return s;
}

enum class Extremum { Max, Min };

Var extremum_axis(Var x, std::size_t axis, Extremum kind, const char* op) {
  const DenseArray& xv = x.value();
  AxisSplit s = split_axis(xv.shape(), axis, op);
  DenseArray out(s.reduced);
  std::vector<std::size_t> arg(out.size());
  const double* px = xv.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t base = o * s.n * s.inner + i;
      std::size_t best = base;
      for (std::size_t k = 1; k < s.n; ++k) {
        std::size_t at = base + k * s.inner;
        bool better = kind == Extremum::Max ? px[at] > px[best] : px[at] < px[best];
        if (better) best = at;
      }
      out[o * s.inner + i] = px[best];
      arg[o * s.inner + i] = best;
    }
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, arg = std::move(arg)](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t k = 0; k < arg.size(); ++k) gx[arg[k]] += g[k];
  });
}

std::size_t row_width(const Shape& shape) {
  std::size_t w = 1;
  for (std::size_t k = 1; k < shape.size(); ++k) w *= shape[k];
  return w;
}

void check_offsets(std::span<const std::size_t> offsets, std::size_t rows, const char* op) {
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != rows) {
    throw DimensionError(std::string(op) + ": offsets must start at 0 and end at the row count " +
                         std::to_string(rows));
  }
  for (std::size_t s = 1; s < offsets.size(); ++s) {
    if (offsets[s] < offsets[s - 1]) throw DimensionError(std::string(op) + ": offsets must be non-decreasing");
  }
}

Shape segment_shape(const Shape& in, std::size_t segments) {
  Shape out = in;
  out[0] = segments;
  return out;
}

Var segment_extremum(Var x, std::span<const std::size_t> offsets, Extremum kind, const char* op) {
  const DenseArray& xv = x.value();
  if (xv.rank() < 1) throw DimensionError(std::string(op) + ": operand must have a leading axis");
  check_offsets(offsets, xv.dim(0), op);
  const std::size_t segs = offsets.size() - 1, w = row_width(xv.shape());
  DenseArray out(segment_shape(xv.shape(), segs));
  std::vector<std::size_t> arg(out.size());
  const double* px = xv.data().data();
  for (std::size_t s = 0; s < segs; ++s) {
    if (offsets[s] == offsets[s + 1]) throw DimensionError(std::string(op) + ": empty segment " + std::to_string(s));
    for (std::size_t c = 0; c < w; ++c) {
      std::size_t best = offsets[s] * w + c;
      for (std::size_t r = offsets[s] + 1; r < offsets[s + 1]; ++r) {
        std::size_t at = r * w + c;
        bool better = kind == Extremum::Max ? px[at] > px[best] : px[at] < px[best];
        if (better) best = at;
      }
      out[s * w + c] = px[best];
      arg[s * w + c] = best;
    }
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, arg = std::move(arg)](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t k = 0; k < arg.size(); ++k) gx[arg[k]] += g[k];
  });
}

}  // namespace

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const std::size_t ix = x.id();
  return x.tape()->record(DenseArray::scalar(acc), {x}, [ix](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    for (double& v : t.accumulator(ix).data()) v += g;
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const std::size_t ix = x.id();
  return x.tape()->record(DenseArray::scalar(acc / n), {x}, [ix, n](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0] / n;
    for (double& v : t.accumulator(ix).data()) v += g;
  });
}

Var sum_axis(Var x, std::size_t axis) {
  const DenseArray& xv = x.value();
  AxisSplit s = split_axis(xv.shape(), axis, "sum_axis");
  DenseArray out(s.reduced, 0.0);
  const double* px = xv.data().data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.n; ++k)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += px[(o * s.n + k) * s.inner + i];
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, s](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t k = 0; k < s.n; ++k)
        for (std::size_t i = 0; i < s.inner; ++i) gx[(o * s.n + k) * s.inner + i] += g[o * s.inner + i];
  });
}

Var mean_axis(Var x, std::size_t axis) {
  Var total = sum_axis(x, axis);
  return total * (1.0 / static_cast<double>(x.shape()[axis]));
}

Var var_axis(Var x, std::size_t axis) {
  const DenseArray& xv = x.value();
  AxisSplit s = split_axis(xv.shape(), axis, "var_axis");
  const double n = static_cast<double>(s.n);
  DenseArray mu(s.reduced, 0.0), out(s.reduced, 0.0);
  const double* px = xv.data().data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.n; ++k)
      for (std::size_t i = 0; i < s.inner; ++i) mu[o * s.inner + i] += px[(o * s.n + k) * s.inner + i];
  for (double& m : mu.data()) m /= n;
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.n; ++k)
      for (std::size_t i = 0; i < s.inner; ++i) {
        double d = px[(o * s.n + k) * s.inner + i] - mu[o * s.inner + i];
        out[o * s.inner + i] += d * d;
      }
  for (double& v : out.data()) v /= n;
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, s, n, mu = std::move(mu)](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    const double* px = t.value(ix).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t k = 0; k < s.n; ++k)
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t at = (o * s.n + k) * s.inner + i, r = o * s.inner + i;
          gx[at] += g[r] * 2.0 * (px[at] - mu[r]) / n;
        }
  });
}

Var max_axis(Var x, std::size_t axis) { return extremum_axis(x, axis, Extremum::Max, "max_axis"); }
Var min_axis(Var x, std::size_t axis) { return extremum_axis(x, axis, Extremum::Min, "min_axis"); }

Var softmax_last(Var x) {
  const DenseArray& xv = x.value();
  if (xv.rank() < 1) throw DimensionError("softmax_last: operand must have at least one axis");
  const std::size_t w = xv.shape().back(), rows = xv.size() / w;
  DenseArray out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* px = xv.data().data() + r * w;
    double* po = out.data().data() + r * w;
    double m = *std::max_element(px, px + w), z = 0.0;
    for (std::size_t k = 0; k < w; ++k) z += (po[k] = std::exp(px[k] - m));
    for (std::size_t k = 0; k < w; ++k) po[k] /= z;
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, w, rows](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    const double* y = t.value(self).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t k = 0; k < w; ++k) dot += g[r * w + k] * y[r * w + k];
      for (std::size_t k = 0; k < w; ++k) gx[r * w + k] += y[r * w + k] * (g[r * w + k] - dot);
    }
  });
}

Var matmul(Var a, Var b) {
  if (a.tape() != b.tape()) throw ContractViolation("matmul: operands live on different tapes");
  const DenseArray& av = a.value();
  const DenseArray& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(av.shape()) + " by " + shape_string(bv.shape()));
  }
  const auto m = static_cast<Eigen::Index>(av.dim(0)), k = static_cast<Eigen::Index>(av.dim(1)),
             n = static_cast<Eigen::Index>(bv.dim(1));
  DenseArray out({av.dim(0), bv.dim(1)});
  MapMut(out.data().data(), m, n).noalias() = MapConst(av.data().data(), m, k) * MapConst(bv.data().data(), k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    MapConst g(t.upstream(self).data().data(), m, n);
    if (t.requires_grad(ia)) {
      MapMut(t.accumulator(ia).data().data(), m, k).noalias() +=
          g * MapConst(t.value(ib).data().data(), k, n).transpose();
    }
    if (t.requires_grad(ib)) {
      MapMut(t.accumulator(ib).data().data(), k, n).noalias() +=
          MapConst(t.value(ia).data().data(), m, k).transpose() * g;
    }
  });
}

Var reshape(Var x, Shape shape) {
  DenseArray out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const auto g = t.upstream(self).data();
    bool fresh;
    auto gx = t.accumulator(ix, fresh).data();
    if (fresh) {
      std::copy(g.begin(), g.end(), gx.begin());
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const DenseArray& xv = x.value();
  AxisSplit s = split_axis(xv.shape(), axis, "slice");
  if (begin >= end || end > s.n) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for axis of length " + std::to_string(s.n));
  }
  Shape shape = xv.shape();
  shape[axis] = end - begin;
  DenseArray out(shape);
  const std::size_t len = end - begin, chunk = len * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o) {
    const double* src = xv.data().data() + (o * s.n + begin) * s.inner;
    std::copy(src, src + chunk, out.data().data() + o * chunk);
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, s, begin, chunk](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = gx + (o * s.n + begin) * s.inner;
      for (std::size_t k = 0; k < chunk; ++k) dst[k] += g[o * chunk + k];
    }
  });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  Tape* tape = parts.front().tape();
  const Shape& first = parts.front().shape();
  AxisSplit base = split_axis(first, axis, "concat");
  std::vector<std::size_t> lens;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape() != tape) throw ContractViolation("concat: operands live on different tapes");
    const Shape& sh = p.shape();
    if (sh.size() != first.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t k = 0; k < sh.size(); ++k) {
      if (k != axis && sh[k] != first[k]) {
        throw DimensionError("concat: shape " + shape_string(sh) + " does not conform with " + shape_string(first));
      }
    }
    lens.push_back(sh[axis]);
    total += sh[axis];
  }
  Shape shape = first;
  shape[axis] = total;
  DenseArray out = DenseArray::uninitialized(shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double* src = parts[p].value().data().data();
    const std::size_t chunk = lens[p] * base.inner;
    for (std::size_t o = 0; o < base.outer; ++o) {
      std::copy(src + o * chunk, src + (o + 1) * chunk, out.data().data() + (o * total + offset) * base.inner);
    }
    offset += lens[p];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return tape->record(std::move(out), parts,
                      [ids, lens, total, outer = base.outer, inner = base.inner](Tape& t, std::size_t self) {
                        const double* g = t.upstream(self).data().data();
                        std::size_t offset = 0;
                        for (std::size_t p = 0; p < ids.size(); ++p) {
                          const std::size_t chunk = lens[p] * inner;
                          if (t.requires_grad(ids[p])) {
                            bool fresh;
                            double* gx = t.accumulator(ids[p], fresh).data().data();
                            for (std::size_t o = 0; o < outer; ++o) {
                              const double* src = g + (o * total + offset) * inner;
                              if (fresh) {
                                std::copy(src, src + chunk, gx + o * chunk);
                              } else {
                                for (std::size_t k = 0; k < chunk; ++k) gx[o * chunk + k] += src[k];
                              }
                            }
                          }
                          offset += lens[p];
                        }
                      });
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
  const DenseArray& xv = x.value();
  if (xv.rank() < 1) throw DimensionError("gather_rows: operand must have a leading axis");
  if (rows.empty()) throw DimensionError("gather_rows: empty index list");
  const std::size_t w = row_width(xv.shape()), n = xv.dim(0);
  Shape shape = xv.shape();
  shape[0] = rows.size();
  DenseArray out(shape);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) throw DimensionError("gather_rows: index " + std::to_string(rows[r]) + " out of range");
    const double* src = xv.data().data() + rows[r] * w;
    std::copy(src, src + w, out.data().data() + r * w);
  }
  const std::size_t ix = x.id();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return x.tape()->record(std::move(out), {x}, [ix, w, idx = std::move(idx)](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = gx + idx[r] * w;
      for (std::size_t c = 0; c < w; ++c) dst[c] += g[r * w + c];
    }
  });
}

Var segment_sum(Var x, std::span<const std::size_t> offsets) {
  const DenseArray& xv = x.value();
  if (xv.rank() < 1) throw DimensionError("segment_sum: operand must have a leading axis");
  check_offsets(offsets, xv.dim(0), "segment_sum");
  const std::size_t segs = offsets.size() - 1, w = row_width(xv.shape());
  DenseArray out(segment_shape(xv.shape(), segs), 0.0);
  const double* px = xv.data().data();
  for (std::size_t s = 0; s < segs; ++s)
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
      for (std::size_t c = 0; c < w; ++c) out[s * w + c] += px[r * w + c];
  const std::size_t ix = x.id();
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  return x.tape()->record(std::move(out), {x}, [ix, w, off = std::move(off)](Tape& t, std::size_t self) {
    const double* g = t.upstream(self).data().data();
    double* gx = t.accumulator(ix).data().data();
    for (std::size_t s = 0; s + 1 < off.size(); ++s)
      for (std::size_t r = off[s]; r < off[s + 1]; ++r)
        for (std::size_t c = 0; c < w; ++c) gx[r * w + c] += g[s * w + c];
  });
}

Var segment_mean(Var x, std::span<const std::size_t> offsets) {
  Var total = segment_sum(x, offsets);
  const std::size_t segs = offsets.size() - 1;
  Shape count_shape(x.shape().size(), 1);
  count_shape[0] = segs;
  DenseArray counts(count_shape);
  for (std::size_t s = 0; s < segs; ++s) {
    if (offsets[s] == offsets[s + 1]) throw DimensionError("segment_mean: empty segment " + std::to_string(s));
    counts[s] = static_cast<double>(offsets[s + 1] - offsets[s]);
  }
  return total / x.tape()->constant(std::move(counts));
}

Var segment_max(Var x, std::span<const std::size_t> offsets) {
  return segment_extremum(x, offsets, Extremum::Max, "segment_max");
}

Var segment_min(Var x, std::span<const std::size_t> offsets) {
  return segment_extremum(x, offsets, Extremum::Min, "segment_min");
}

}  // namespace subdetector::grad
