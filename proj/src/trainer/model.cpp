#include "subdetector/trainer/model.hpp"

#include <algorithm>

#include "subdetector/encoder/length_selection.hpp"
#include "subdetector/errors.hpp"

namespace subdetector {

using grad::Var;

void AblationConfig::normalize() {
  if (fixed_length) no_length_selection = true;
}

GraphData::GraphData(const TimeSeries& series, const WindowConfig& window, std::size_t K)
    : series_(series),
      set_(std::make_unique<SubsequenceSet>(make_windows(series, window))),
      profile_(std::make_unique<DistanceProfile>(pairwise_distances(*set_))),
      graph_(build_prior_graph(*set_, *profile_, K)),
      edges_(EdgeIndex::from_graph(graph_)) {}

NodeBatch make_batch(const GraphData& data, const InjectedBatch* injected) {
  const SubsequenceSet& set = data.set();
  const PriorGraph& g = data.graph();
  const std::size_t N = set.count(), L = set.length();
  NodeBatch b;
  b.edges = data.edges();
  b.positions.assign(set.starts().begin(), set.starts().end());
  b.length_rows.resize(N);
  for (std::size_t i = 0; i < N; ++i) b.length_rows[i] = i;
  b.y.assign(N, 0);
  std::vector<double> attrs(g.attrs);
  if (injected) {
    b.injected = injected;
    for (std::size_t k = 0; k < injected->count(); ++k) {
      const std::size_t s = injected->sources[k];
      std::span<const double> w = std::span<const double>(injected->windows).subspan(k * L, L);
      for (std::size_t j : g.neighbors(s)) {
        std::vector<double> a = edge_attributes(data.profile(), w, j);
        attrs.insert(attrs.end(), a.begin(), a.end());
        b.edges.src.push_back(j);
        b.edges.dst.push_back(N + k);
      }
      b.edges.offsets.push_back(b.edges.src.size());
      b.positions.push_back(set.starts()[s]);
      b.length_rows.push_back(s);
      b.y.push_back(1);
    }
  }
  b.attrs = grad::DenseArray({b.edges.edges(), g.attr_dim}, std::move(attrs));
  return b;
}

Model::Model(const ModelConfig& config, const WindowConfig& window, std::size_t nodes, std::size_t attr_dim,
             std::optional<std::size_t> period, std::uint64_t seed)
    : config_(config), window_(window), period_(period) {
  config_.ablation.normalize();
  if (period_) {
    if (!config_.dagnn.delta3) config_.dagnn.delta3 = static_cast<double>(*period_);
  } else {
    config_.dagnn.delta3.reset();
  }
  config_.dagnn.adaptive = !config_.ablation.no_adaptive;
  config_.dagnn.density = !config_.ablation.no_density;
  for (std::size_t p = 0; p < window_.scale_count(); ++p) scale_lengths_.push_back(window_.scale_length(p));
  if (config_.ablation.fixed_length && *config_.ablation.fixed_length == 0) throw ConfigError("fixed_length must be positive");

  std::mt19937_64 rng(seed);
  tcn = Tcn(config_.tcn, rng);
  const std::size_t d = config_.tcn.hidden;
  head = Mlp("head", {4 * d, 2 * d, d}, rng);
  dagnn = Dagnn(config_.dagnn, d, attr_dim, window_.max_length(), rng);
  grad::DenseArray w({nodes, window_.scale_count()}, 0.0);
  if (config_.length_prior) {
    if (*config_.length_prior >= window_.scale_count()) throw ConfigError("length prior scale out of range");
    for (std::size_t i = 0; i < nodes; ++i) w.at(i, *config_.length_prior) = config_.length_prior_logit;
  }
  lengths = grad::TrainableParam("lengths", std::move(w));
}

Var Model::encode(grad::Tape& tape, const GraphData& data, const InjectedBatch* injected, bool trainable) {
  const SubsequenceSet& set = data.set();
  const std::size_t N = set.count(), L = set.length(), d = config_.tcn.hidden;
  const std::size_t M = injected ? injected->count() : 0;
  RowPlan plan;
  plan.split.reserve(N + M);
  std::vector<Var> parts;
  std::size_t offset = 0;

  // The TCN is causal with receptive field rf and normalizes per time step, so a
  // window's output at t >= rf - 1 equals the whole-series output at start + t.
  // Only the first rf - 1 steps (which see the window's zero padding) are
  // recomputed per window.
  const std::size_t B = std::min(tcn.config().receptive_field() - 1, L);
  const bool shared = set.config().stride <= L;
  if (shared) {
    const std::size_t C = set.starts().back() + L;
    const auto& values = data.series().values;
    grad::DenseArray xs({1, C, 1}, std::vector<double>(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(C)));
    parts.push_back(grad::reshape(tcn.forward(tape, tape.constant(std::move(xs)), trainable), {C, d}));
    offset = C;
    if (B > 0) {
      grad::DenseArray xb({N, B, 1});
      for (std::size_t i = 0; i < N; ++i) std::copy_n(set.window(i).begin(), B, xb.data().begin() + static_cast<std::ptrdiff_t>(i * B));
      parts.push_back(grad::reshape(tcn.forward(tape, tape.constant(std::move(xb)), trainable), {N * B, d}));
    }
    for (std::size_t i = 0; i < N; ++i) {
      plan.split.push_back(B);
      plan.head.push_back(offset + i * B);
      plan.tail.push_back(set.starts()[i]);
    }
    offset += N * B;
  } else {
    grad::DenseArray xw({N, L, 1}, std::vector<double>(set.matrix().begin(), set.matrix().end()));
    parts.push_back(grad::reshape(tcn.forward(tape, tape.constant(std::move(xw)), trainable), {N * L, d}));
    for (std::size_t i = 0; i < N; ++i) {
      plan.split.push_back(L);
      plan.head.push_back(i * L);
      plan.tail.push_back(0);
    }
    offset = N * L;
  }
  if (M > 0) {
    grad::DenseArray xi({M, L, 1}, injected->windows);
    parts.push_back(grad::reshape(tcn.forward(tape, tape.constant(std::move(xi)), trainable), {M * L, d}));
    for (std::size_t k = 0; k < M; ++k) {
      plan.split.push_back(L);
      plan.head.push_back(offset + k * L);
      plan.tail.push_back(0);
    }
  }
  Var rows = parts.size() == 1 ? parts.front() : grad::concat(parts, 0);
  return multiscale_stats(rows, plan, scale_lengths_);
}

Model::Outputs Model::propagate(grad::Tape& tape, Var zs, const NodeBatch& batch, bool train_theta, bool train_lengths) {
  Outputs out;
  const AblationConfig& ab = config_.ablation;
  if (ab.fixed_length) {
    out.z = single_length(zs, nearest_scale(window_, *ab.fixed_length));
  } else if (ab.no_length_selection) {
    out.z = average_lengths(zs);
  } else {
    out.z = select_length(zs, grad::gather_rows(tape.param(lengths, train_lengths), batch.length_rows));
  }
  out.h = head.forward(tape, out.z, train_theta);
  if (ab.no_graph) {
    out.h_out = out.h;
  } else {
    std::vector<double> temporal;
    if (dagnn.config().delta3) temporal = temporal_gaps(batch.edges, batch.positions, static_cast<double>(*period_));
    Var attrs = tape.constant(batch.attrs);
    AdjacencyTerms adj = dagnn.adjacency(tape, out.h, batch.edges, attrs, temporal, train_theta);
    Var h = out.h;
    for (std::size_t k = 0; k < dagnn.layers.size(); ++k) h = dagnn.message_pass(tape, h, adj.log_ahat, batch.edges, k, train_theta);
    out.h_out = h;
    out.adjacency = adj;
  }
  out.scores = neighbor_scores(out.h_out, batch.edges);
  return out;
}

Model::Outputs Model::forward(grad::Tape& tape, const GraphData& data, const NodeBatch& batch, bool train_theta,
                              bool train_lengths) {
  return propagate(tape, encode(tape, data, batch.injected, train_theta), batch, train_theta, train_lengths);
}

ParamList Model::theta() {
  ParamList out;
  tcn.collect(out);
  head.collect(out);
  if (!config_.ablation.no_graph) {
    dagnn.collect(out);
  } else {
    dagnn.decoder.collect(out);
  }
  return out;
}

ParamList Model::all_params() {
  ParamList out;
  tcn.collect(out);
  head.collect(out);
  dagnn.collect(out);
  out.push_back(&lengths);
  return out;
}

}  // namespace subdetector
