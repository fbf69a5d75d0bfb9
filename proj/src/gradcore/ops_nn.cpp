#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "subdetector/errors.hpp"
#include "subdetector/gradcore/ops.hpp"

namespace subdetector::grad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMut = Eigen::Map<RowMatrix>;
using MapConst = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  std::size_t n, len, cin, cout, k, dilation;
  std::size_t rows() const { return n * len; }
  std::size_t width() const { return k * cin; }
};

// Rows are processed in blocks small enough that the unfolded columns stay in
// cache; materializing them for the whole batch made the op memory-bound.
constexpr std::size_t kBlockRows = 1024;

// cols[r - r0, k * cin + c] = x[b, t - (K-1-k) * dilation, c] for flat row r = (b, t),
// zero before the start of the sequence.
void im2col(const double* x, const ConvGeometry& g, std::size_t r0, std::size_t r1, RowMatrix& cols) {
  cols.resize(static_cast<Eigen::Index>(r1 - r0), static_cast<Eigen::Index>(g.width()));
  for (std::size_t r = r0; r < r1; ++r) {
    const std::size_t t = r % g.len;
    double* dst = cols.data() + (r - r0) * g.width();
    for (std::size_t k = 0; k < g.k; ++k) {
      const std::size_t shift = (g.k - 1 - k) * g.dilation;
      if (shift > t) {
        std::fill_n(dst + k * g.cin, g.cin, 0.0);
        continue;
      }
      const double* src = x + (r - shift) * g.cin;
      std::copy(src, src + g.cin, dst + k * g.cin);
    }
  }
}

}  // namespace

Var causal_conv1d(Var x, Var weight, Var bias, std::size_t dilation) {
  if (x.tape() != weight.tape() || x.tape() != bias.tape()) {
    throw ContractViolation("causal_conv1d: operands live on different tapes");
  }
  const DenseArray& xv = x.value();
  const DenseArray& wv = weight.value();
  const DenseArray& bv = bias.value();
  if (xv.rank() != 3 || wv.rank() != 3 || bv.rank() != 1 || wv.dim(1) != xv.dim(2) || bv.dim(0) != wv.dim(2)) {
    throw DimensionError("causal_conv1d: incompatible shapes x" + shape_string(xv.shape()) + " weight" +
                         shape_string(wv.shape()) + " bias" + shape_string(bv.shape()));
  }
  if (dilation == 0) throw DimensionError("causal_conv1d: dilation must be positive");
  const ConvGeometry geo{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(2), wv.dim(0), dilation};
  const auto width = static_cast<Eigen::Index>(geo.width()), cout = static_cast<Eigen::Index>(geo.cout);

  DenseArray out = DenseArray::uninitialized({geo.n, geo.len, geo.cout});
  {
    const MapConst w(wv.data().data(), width, cout);
    const auto b = MapConst(bv.data().data(), 1, cout).row(0);
    RowMatrix cols;
    for (std::size_t r0 = 0; r0 < geo.rows(); r0 += kBlockRows) {
      const std::size_t r1 = std::min(geo.rows(), r0 + kBlockRows);
      im2col(xv.data().data(), geo, r0, r1, cols);
      MapMut o(out.data().data() + r0 * geo.cout, static_cast<Eigen::Index>(r1 - r0), cout);
      o.noalias() = cols * w;
      o.rowwise() += b;
    }
  }

  const std::size_t ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.tape()->record(std::move(out), {x, weight, bias}, [ix, iw, ib, geo](Tape& t, std::size_t self) {
    const auto rows = static_cast<Eigen::Index>(geo.rows()), width = static_cast<Eigen::Index>(geo.width()),
               cout = static_cast<Eigen::Index>(geo.cout);
    const double* pg = t.upstream(self).data().data();
    MapConst g(pg, rows, cout);
    if (t.requires_grad(ib)) {
      MapMut(t.accumulator(ib).data().data(), 1, cout).row(0) += g.colwise().sum();
    }
    if (t.requires_grad(iw)) {
      MapMut gw(t.accumulator(iw).data().data(), width, cout);
      RowMatrix cols;
      for (std::size_t r0 = 0; r0 < geo.rows(); r0 += kBlockRows) {
        const std::size_t r1 = std::min(geo.rows(), r0 + kBlockRows);
        im2col(t.value(ix).data().data(), geo, r0, r1, cols);
        gw.noalias() += cols.transpose() * MapConst(pg + r0 * geo.cout, static_cast<Eigen::Index>(r1 - r0), cout);
      }
    }
    if (t.requires_grad(ix)) {
      // Gather form: gx[b, s] sums gcols[b, s + shift_k] over the taps that read step s,
      // so each block needs gcols for up to max_shift rows past its end.
      const MapConst w(t.value(iw).data().data(), width, cout);
      const std::size_t max_shift = (geo.k - 1) * geo.dilation;
      bool fresh;
      double* gx = t.accumulator(ix, fresh).data().data();
      std::vector<double> acc(geo.cin);
      RowMatrix gcols;
      for (std::size_t r0 = 0; r0 < geo.rows(); r0 += kBlockRows) {
        const std::size_t r1 = std::min(geo.rows(), r0 + kBlockRows);
        const std::size_t e1 = std::min(geo.rows(), r1 + max_shift);
        gcols.noalias() = MapConst(pg + r0 * geo.cout, static_cast<Eigen::Index>(e1 - r0), cout) * w.transpose();
        for (std::size_t r = r0; r < r1; ++r) {
          const std::size_t s = r % geo.len;
          std::fill(acc.begin(), acc.end(), 0.0);
          for (std::size_t k = geo.k; k-- > 0;) {
            const std::size_t shift = (geo.k - 1 - k) * geo.dilation;
            if (s + shift >= geo.len) continue;
            const double* src = gcols.data() + (r + shift - r0) * geo.width() + k * geo.cin;
            for (std::size_t c = 0; c < geo.cin; ++c) acc[c] += src[c];
          }
          double* dst = gx + r * geo.cin;
          if (fresh) {
            std::copy(acc.begin(), acc.end(), dst);
          } else {
            for (std::size_t c = 0; c < geo.cin; ++c) dst[c] += acc[c];
          }
        }
      }
    }
  });
}

Var layer_norm_last(Var x, Var gain, Var bias, double eps) {
  if (x.tape() != gain.tape() || x.tape() != bias.tape()) {
    throw ContractViolation("layer_norm_last: operands live on different tapes");
  }
  const DenseArray& xv = x.value();
  if (xv.rank() < 1) throw DimensionError("layer_norm_last: operand must have at least one axis");
  const std::size_t w = xv.shape().back(), rows = xv.size() / w;
  if (gain.value().shape() != Shape{w} || bias.value().shape() != Shape{w}) {
    throw DimensionError("layer_norm_last: gain and bias must have shape [" + std::to_string(w) + "]");
  }
  const double* pg = gain.value().data().data();
  const double* pb = bias.value().data().data();
  std::vector<double> mu(rows), inv(rows);
  DenseArray out = DenseArray::uninitialized(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* px = xv.data().data() + r * w;
    double m = 0.0, v = 0.0;
    for (std::size_t c = 0; c < w; ++c) m += px[c];
    m /= static_cast<double>(w);
    for (std::size_t c = 0; c < w; ++c) v += (px[c] - m) * (px[c] - m);
    v /= static_cast<double>(w);
    mu[r] = m;
    inv[r] = 1.0 / std::sqrt(v + eps);
    double* po = out.data().data() + r * w;
    for (std::size_t c = 0; c < w; ++c) po[c] = (px[c] - m) * inv[r] * pg[c] + pb[c];
  }

  const std::size_t ix = x.id(), ig = gain.id(), ibias = bias.id();
  return x.tape()->record(
      std::move(out), {x, gain, bias},
      [ix, ig, ibias, w, rows, mu = std::move(mu), inv = std::move(inv)](Tape& t, std::size_t self) {
        const double* g = t.upstream(self).data().data();
        const double* px = t.value(ix).data().data();
        const double* pg = t.value(ig).data().data();
        double* gg = t.requires_grad(ig) ? t.accumulator(ig).data().data() : nullptr;
        double* gb = t.requires_grad(ibias) ? t.accumulator(ibias).data().data() : nullptr;
        bool fresh = false;
        double* gx = t.requires_grad(ix) ? t.accumulator(ix, fresh).data().data() : nullptr;
        const double inv_w = 1.0 / static_cast<double>(w);
        // Local sums keep the row loops free of stores that may alias the inputs.
        std::vector<double> sum_g(w, 0.0), sum_b(w, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* xr = px + r * w;
          const double* gr = g + r * w;
          const double m = mu[r], iv = inv[r];
          double sum_d = 0.0, sum_dx = 0.0;
          for (std::size_t c = 0; c < w; ++c) {
            const double xhat = (xr[c] - m) * iv;
            const double d = gr[c] * pg[c];
            sum_g[c] += gr[c] * xhat;
            sum_b[c] += gr[c];
            sum_d += d;
            sum_dx += d * xhat;
          }
          if (!gx) continue;
          const double a = iv * inv_w * sum_d, b = iv * inv_w * sum_dx;
          double* gxr = gx + r * w;
          if (fresh) {
            for (std::size_t c = 0; c < w; ++c) gxr[c] = iv * gr[c] * pg[c] - a - (xr[c] - m) * iv * b;
          } else {
            for (std::size_t c = 0; c < w; ++c) gxr[c] += iv * gr[c] * pg[c] - a - (xr[c] - m) * iv * b;
          }
        }
        for (std::size_t c = 0; c < w; ++c) {
          if (gg) gg[c] += sum_g[c];
          if (gb) gb[c] += sum_b[c];
        }
      });
}

}  // namespace subdetector::grad
