#include "subdetector/encoder/tcn.hpp"

#include <algorithm>
#include <string>

#include "subdetector/errors.hpp"
#include "subdetector/gradcore/adam.hpp"

namespace subdetector {

std::size_t TcnConfig::receptive_field() const {
  std::size_t rf = 1;
  for (std::size_t d : dilations) rf += (kernel_size - 1) * d;
  return rf;
}

void TcnConfig::validate() const {
  if (layers == 0 || kernel_size == 0 || hidden == 0) throw ConfigError("TCN layers, kernel size and width must be positive");
  if (dilations.size() != layers) throw ConfigError("TCN needs one dilation per layer");
  for (std::size_t d : dilations)
    if (d == 0) throw ConfigError("TCN dilations must be positive");
}

Tcn::Tcn(const TcnConfig& config, std::mt19937_64& rng) : config_(config) {
  config_.validate();
  std::size_t in = 1;
  for (std::size_t k = 0; k < config_.layers; ++k) {
    const std::string name = "tcn." + std::to_string(k);
    const std::size_t out = config_.hidden;
    layers.push_back(Layer{
        grad::TrainableParam(name + ".weight", grad::uniform_init({config_.kernel_size, in, out}, config_.kernel_size * in, rng)),
        grad::TrainableParam(name + ".bias", grad::DenseArray({out}, 0.0)),
        grad::TrainableParam(name + ".gain", grad::DenseArray({out}, 1.0)),
        grad::TrainableParam(name + ".shift", grad::DenseArray({out}, 0.0)),
    });
    in = out;
  }
}

grad::Var Tcn::forward(grad::Tape& tape, grad::Var x, bool trainable) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Layer& l = layers[k];
    x = grad::causal_conv1d(x, tape.param(l.weight, trainable), tape.param(l.bias, trainable), config_.dilations[k]);
    x = grad::relu(x);
    if (config_.normalize) x = grad::layer_norm_last(x, tape.param(l.gain, trainable), tape.param(l.shift, trainable));
  }
  return x;
}

void Tcn::collect(ParamList& out) {
  for (Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
    if (config_.normalize) {
      out.push_back(&l.gain);
      out.push_back(&l.shift);
    }
  }
}

grad::DenseArray tcn_forward(Tcn& tcn, std::span<const double> windows, std::size_t n, std::size_t length) {
  grad::Tape tape;
  grad::Var x = tape.constant(grad::DenseArray({n, length, 1}, std::vector<double>(windows.begin(), windows.end())));
  return tcn.forward(tape, x, false).value();
}

grad::Var stats_pool(grad::Var r) {
  if (r.shape().size() != 3) throw DimensionError("stats_pool: expected [N, l, d], got " + grad::shape_string(r.shape()));
  return grad::concat({grad::mean_axis(r, 1), grad::var_axis(r, 1), grad::max_axis(r, 1), grad::min_axis(r, 1)}, 1);
}

grad::Var multiscale_stats(grad::Var rows, const RowPlan& plan, std::span<const std::size_t> lengths) {
  const grad::DenseArray& xv = rows.value();
  if (xv.rank() != 2) throw DimensionError("multiscale_stats: rows must be [R, d]");
  if (lengths.empty() || lengths.front() == 0 || !std::is_sorted(lengths.begin(), lengths.end())) {
    throw DimensionError("multiscale_stats: lengths must be positive and ascending");
  }
  const std::size_t n = plan.size(), S = lengths.size(), d = xv.dim(1), span = lengths.back();
  for (std::size_t i = 0; i < n; ++i) {
    if (plan.row(i, span - 1) >= xv.dim(0) || plan.row(i, 0) >= xv.dim(0)) {
      throw DimensionError("multiscale_stats: row plan exceeds the representation matrix");
    }
  }
  const double* x = xv.data().data();
  grad::DenseArray out = grad::DenseArray::uninitialized({n, S, 4 * d});
  std::vector<std::size_t> argmax(n * S * d), argmin(n * S * d);
  std::vector<double> mean(d), m2(d), hi(d), lo(d);
  std::vector<std::size_t> ahi(d), alo(d);

  // One Welford pass per window yields every prefix scale.
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
    std::size_t s = 0;
    for (std::size_t t = 0; t < span; ++t) {
      const std::size_t r = plan.row(i, t);
      const double* xr = x + r * d;
      const double inv_count = 1.0 / static_cast<double>(t + 1);
      for (std::size_t c = 0; c < d; ++c) {
        const double delta = xr[c] - mean[c];
        mean[c] += delta * inv_count;
        m2[c] += delta * (xr[c] - mean[c]);
        if (t == 0 || xr[c] > hi[c]) hi[c] = xr[c], ahi[c] = r;
        if (t == 0 || xr[c] < lo[c]) lo[c] = xr[c], alo[c] = r;
      }
      while (s < S && t + 1 == lengths[s]) {
        const double l = static_cast<double>(lengths[s]);
        double* o = out.data().data() + (i * S + s) * 4 * d;
        for (std::size_t c = 0; c < d; ++c) {
          o[c] = mean[c];
          o[d + c] = m2[c] / l;
          o[2 * d + c] = hi[c];
          o[3 * d + c] = lo[c];
          argmax[(i * S + s) * d + c] = ahi[c];
          argmin[(i * S + s) * d + c] = alo[c];
        }
        ++s;
      }
    }
  }

  const std::size_t ix = rows.id();
  std::vector<std::size_t> lens(lengths.begin(), lengths.end());
  return rows.tape()->record(
      std::move(out), {rows},
      [ix, plan, lens, n, S, d, argmax = std::move(argmax), argmin = std::move(argmin)](grad::Tape& tape, std::size_t self) {
        const double* g = tape.upstream(self).data().data();
        const double* y = tape.value(self).data().data();
        const double* x = tape.value(ix).data().data();
        double* gx = tape.accumulator(ix).data().data();
        // Step u feeds every scale longer than u, so suffix sums over scales of
        // gmean / l, 2 gvar / l and 2 gvar mean / l give its gradient in one pass.
        std::vector<double> a(S * d), b(S * d), m(S * d);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t s = S; s-- > 0;) {
            const std::size_t base = (i * S + s) * 4 * d;
            const double l = static_cast<double>(lens[s]);
            for (std::size_t c = 0; c < d; ++c) {
              const double bs = 2.0 * g[base + d + c] / l;
              a[s * d + c] = g[base + c] / l;
              b[s * d + c] = bs;
              m[s * d + c] = bs * y[base + c];
              if (s + 1 < S) {
                a[s * d + c] += a[(s + 1) * d + c];
                b[s * d + c] += b[(s + 1) * d + c];
                m[s * d + c] += m[(s + 1) * d + c];
              }
            }
          }
          std::size_t u = 0;
          for (std::size_t s = 0; s < S; ++s) {
            const double* as = a.data() + s * d;
            const double* bs = b.data() + s * d;
            const double* ms = m.data() + s * d;
            for (; u < lens[s]; ++u) {
              const std::size_t r = plan.row(i, u);
              double* gr = gx + r * d;
              const double* xr = x + r * d;
              for (std::size_t c = 0; c < d; ++c) gr[c] += as[c] + bs[c] * xr[c] - ms[c];
            }
          }
          for (std::size_t s = 0; s < S; ++s) {
            const std::size_t base = (i * S + s) * 4 * d;
            for (std::size_t c = 0; c < d; ++c) {
              gx[argmax[(i * S + s) * d + c] * d + c] += g[base + 2 * d + c];
              gx[argmin[(i * S + s) * d + c] * d + c] += g[base + 3 * d + c];
            }
          }
        }
      });
}

}  // namespace subdetector
