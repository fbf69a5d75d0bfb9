#include "subdetector/dagnn/dagnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "subdetector/errors.hpp"
#include "subdetector/gradcore/adam.hpp"

namespace subdetector {

using grad::Var;

EdgeIndex EdgeIndex::from_graph(const PriorGraph& graph) {
  EdgeIndex e;
  e.offsets = graph.offsets;
  e.src = graph.sources;
  e.dst.resize(graph.edge_count());
  for (std::size_t i = 0; i < graph.nodes; ++i)
    for (std::size_t k = graph.offsets[i]; k < graph.offsets[i + 1]; ++k) e.dst[k] = i;
  return e;
}

Dagnn::Dagnn(const DagnnConfig& config, std::size_t hidden, std::size_t attr_dim, std::size_t window_length,
             std::mt19937_64& rng)
    : edge_mlp("dagnn.edge", {attr_dim, 8, 1}, rng),
      density_mlp("dagnn.density", {4, 8, 1}, rng),
      config_(config) {
  if (config.delta1 <= 0 || config.delta2 <= 0 || config.delta4 <= 0 || (config.delta3 && *config.delta3 <= 0)) {
    throw ConfigError("adjacency scale factors must be positive");
  }
  if (config.layers == 0) throw ConfigError("at least one message-passing layer is required");
  for (std::size_t k = 0; k < config.layers; ++k) {
    const std::string name = "dagnn.layer" + std::to_string(k);
    layers.push_back(Layer{grad::TrainableParam(name + ".w1", grad::uniform_init({hidden, hidden}, hidden, rng)),
                           grad::TrainableParam(name + ".w2", grad::uniform_init({hidden, hidden}, hidden, rng)),
                           grad::TrainableParam(name + ".b", grad::DenseArray({hidden}, 0.0))});
  }
  decoder = Mlp("dagnn.decoder", {hidden, 2 * hidden, window_length}, rng);
}

Var Dagnn::adjacency_logits(grad::Tape& tape, Var h, const EdgeIndex& edges, Var edge_attrs,
                            std::span<const double> temporal, bool trainable) {
  const std::size_t E = edges.edges();
  Var diff = grad::gather_rows(h, edges.dst) - grad::gather_rows(h, edges.src);
  Var latent = grad::sum_axis(grad::square(diff), 1) * (1.0 / config_.delta1);
  Var data = grad::reshape(grad::softplus(edge_mlp.forward(tape, edge_attrs, trainable)), {E}) * (1.0 / config_.delta2);
  Var exponent = latent + data;
  if (config_.delta3) {
    if (temporal.size() != E) throw DimensionError("adjacency_logits: one temporal gap per edge required");
    grad::DenseArray gaps({E}, std::vector<double>(temporal.begin(), temporal.end()));
    for (double& g : gaps.data()) g /= *config_.delta3;
    exponent = exponent + tape.constant(std::move(gaps));
  }
  return -exponent;
}

Var Dagnn::density_logits(grad::Tape& tape, Var log_a, const EdgeIndex& edges, bool trainable) {
  const std::size_t N = edges.nodes();
  Var a = grad::exp(log_a);
  Var mean = grad::segment_mean(a, edges.offsets);
  Var hi = grad::segment_max(a, edges.offsets);
  Var lo = grad::segment_min(a, edges.offsets);
  Var centered = a - grad::gather_rows(mean, edges.dst);
  // small floor keeps the sqrt differentiable for single-edge and flat rows
  Var sd = grad::sqrt(grad::segment_mean(grad::square(centered), edges.offsets) + 1e-12);
  Var summary = grad::concat({grad::reshape(mean, {N, 1}), grad::reshape(hi, {N, 1}), grad::reshape(lo, {N, 1}),
                              grad::reshape(sd, {N, 1})},
                             1);
  Var g = grad::reshape(grad::softplus(density_mlp.forward(tape, summary, trainable)), {N}) * (1.0 / config_.delta4);
  const auto& at = config_.density_mode == DensityMode::Source ? edges.src : edges.dst;
  return log_a - grad::gather_rows(g, at);
}

AdjacencyTerms Dagnn::adjacency(grad::Tape& tape, Var h, const EdgeIndex& edges, Var edge_attrs,
                                std::span<const double> temporal, bool trainable) {
  AdjacencyTerms t;
  if (config_.adaptive) {
    t.log_a = adjacency_logits(tape, h, edges, edge_attrs, temporal, trainable);
  } else {
    t.log_a = tape.constant(grad::DenseArray({edges.edges()}, 0.0));
  }
  t.log_ahat = config_.density ? density_logits(tape, t.log_a, edges, trainable) : t.log_a;
  return t;
}

Var normalize_rows(Var log_w, const EdgeIndex& edges) {
  const std::size_t N = edges.nodes(), E = edges.edges();
  if (log_w.shape() != grad::Shape{E}) throw DimensionError("normalize_rows: expected one weight per edge");
  const double* lw = log_w.value().data().data();
  grad::DenseArray shift({E});
  for (std::size_t i = 0; i < N; ++i) {
    if (edges.offsets[i] == edges.offsets[i + 1]) throw ContractViolation("node " + std::to_string(i) + " has no in-edges");
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t e = edges.offsets[i]; e < edges.offsets[i + 1]; ++e) m = std::max(m, lw[e]);
    if (!std::isfinite(m)) throw ContractViolation("node " + std::to_string(i) + " has zero total edge weight");
    for (std::size_t e = edges.offsets[i]; e < edges.offsets[i + 1]; ++e) shift[e] = m;
  }
  Var w = grad::exp(log_w - log_w.tape()->constant(std::move(shift)));
  return w / grad::gather_rows(grad::segment_sum(w, edges.offsets), edges.dst);
}

Var Dagnn::message_pass(grad::Tape& tape, Var h, Var log_w, const EdgeIndex& edges, std::size_t layer, bool trainable) {
  Layer& l = layers.at(layer);
  const std::size_t E = edges.edges();
  Var weights = grad::reshape(normalize_rows(log_w, edges), {E, 1});
  Var agg = grad::segment_sum(weights * grad::gather_rows(h, edges.src), edges.offsets);
  return grad::relu(grad::matmul(agg, tape.param(l.w1, trainable)) + grad::matmul(h, tape.param(l.w2, trainable)) +
                    tape.param(l.b, trainable));
}

Var Dagnn::forward(grad::Tape& tape, Var h, const EdgeIndex& edges, Var edge_attrs, std::span<const double> temporal,
                   bool trainable) {
  AdjacencyTerms t = adjacency(tape, h, edges, edge_attrs, temporal, trainable);
  for (std::size_t k = 0; k < layers.size(); ++k) h = message_pass(tape, h, t.log_ahat, edges, k, trainable);
  return h;
}

Var Dagnn::decode(grad::Tape& tape, Var h_out, bool trainable) { return decoder.forward(tape, h_out, trainable); }

void Dagnn::collect(ParamList& out) {
  edge_mlp.collect(out);
  density_mlp.collect(out);
  for (Layer& l : layers) {
    out.push_back(&l.w1);
    out.push_back(&l.w2);
    out.push_back(&l.b);
  }
  decoder.collect(out);
}

std::vector<double> temporal_gaps(const EdgeIndex& edges, std::span<const std::size_t> positions,
                                  std::optional<double> period) {
  std::vector<double> out(edges.edges());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const double a = static_cast<double>(positions[edges.dst[e]]), b = static_cast<double>(positions[edges.src[e]]);
    out[e] = period ? std::fmod(std::abs(a - b), *period) : std::abs(a - b);
  }
  return out;
}

Var neighbor_scores(Var h, const EdgeIndex& edges) {
  Var diff = grad::gather_rows(h, edges.dst) - grad::gather_rows(h, edges.src);
  return grad::segment_mean(grad::sum_axis(grad::square(diff), 1), edges.offsets);
}

void write_adjacency(std::ostream& out, const PriorGraph& graph, std::span<const double> a, std::span<const double> a_hat) {
  if (a.size() != graph.edge_count() || a_hat.size() != graph.edge_count()) {
    throw DimensionError("write_adjacency: one weight per edge required");
  }
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ' ' << buf;
  };
  for (std::size_t i = 0; i < graph.nodes; ++i) {
    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
      out << i << ' ' << graph.sources[e];
      for (double v : graph.attr(e)) put(v);
      put(a[e]);
      put(a_hat[e]);
      out << '\n';
    }
  }
}

}  // namespace subdetector
