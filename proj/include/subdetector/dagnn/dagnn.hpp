#pragma once

#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "subdetector/encoder/layers.hpp"
#include "subdetector/proximity/proximity.hpp"

namespace subdetector {

// Edge list grouped by target node: edge e runs src[e] -> dst[e], and the edges
// of node i occupy [offsets[i], offsets[i+1]).
struct EdgeIndex {
  std::vector<std::size_t> offsets, src, dst;

  std::size_t nodes() const { return offsets.size() - 1; }
  std::size_t edges() const { return src.size(); }
  static EdgeIndex from_graph(const PriorGraph& graph);
};

// Where the per-node density factor is applied.
// Source: A_ij * exp(-g_j), the neighbour's density scales its message.
// Target: A_ij * exp(-g_i), one multiplier per row; it cancels under row normalization.
enum class DensityMode { Source, Target };

struct DagnnConfig {
  double delta1 = 64.0;
  double delta2 = 1.0;
  std::optional<double> delta3;  // temporal term is dropped when unset
  double delta4 = 1.0;
  DensityMode density_mode = DensityMode::Source;
  std::size_t layers = 1;
  bool adaptive = true;  // false: uniform weights on the prior support
  bool density = true;   // false: message passing uses A instead of the refined weights
};

// Intermediate adjacency terms, all on the tape. Weights are kept in log space so
// row normalization never divides by an underflowed sum.
struct AdjacencyTerms {
  grad::Var log_a;     // [E] log A
  grad::Var log_ahat;  // [E] log of the refined weights
};

class Dagnn {
 public:
  Dagnn() = default;
  Dagnn(const DagnnConfig& config, std::size_t hidden, std::size_t attr_dim, std::size_t window_length,
        std::mt19937_64& rng);

  // log A_ij = -(|H_i - H_j|^2 / d1 + softplus(EdgeMLP(E_ij)) / d2 + temporal_ij / d3).
  // temporal holds |pos_i - pos_j| mod T per edge (ignored when delta3 is unset).
  grad::Var adjacency_logits(grad::Tape& tape, grad::Var h, const EdgeIndex& edges, grad::Var edge_attrs,
                             std::span<const double> temporal, bool trainable = true);

  // Adds -softplus(DensityMLP(summary_i)) / d4, summary_i = [mean, max, min, std] of row i of A.
  grad::Var density_logits(grad::Tape& tape, grad::Var log_a, const EdgeIndex& edges, bool trainable = true);

  AdjacencyTerms adjacency(grad::Tape& tape, grad::Var h, const EdgeIndex& edges, grad::Var edge_attrs,
                           std::span<const double> temporal, bool trainable = true);

  // One layer: ReLU(D^-1 W H W1 + H W2 + b) with W = exp(log_w) on the edge support.
  grad::Var message_pass(grad::Tape& tape, grad::Var h, grad::Var log_w, const EdgeIndex& edges, std::size_t layer,
                         bool trainable = true);

  // Adjacency, refinement and all message-passing layers.
  grad::Var forward(grad::Tape& tape, grad::Var h, const EdgeIndex& edges, grad::Var edge_attrs,
                    std::span<const double> temporal, bool trainable = true);

  grad::Var decode(grad::Tape& tape, grad::Var h_out, bool trainable = true);

  void collect(ParamList& out);
  const DagnnConfig& config() const { return config_; }

  Mlp edge_mlp, density_mlp, decoder;
  struct Layer {
    grad::TrainableParam w1, w2, b;
  };
  std::vector<Layer> layers;

 private:
  DagnnConfig config_;
};

// Per-edge |pos_dst - pos_src| mod period (or the plain gap without a period).
std::vector<double> temporal_gaps(const EdgeIndex& edges, std::span<const std::size_t> positions,
                                  std::optional<double> period);

// Row-normalized weights exp(log_w) / sum over the row, computed stably.
grad::Var normalize_rows(grad::Var log_w, const EdgeIndex& edges);

// Per-node mean over in-edges of |H_i - H_j|^2: [N].
grad::Var neighbor_scores(grad::Var h, const EdgeIndex& edges);

// Edge list with A and the refined weights appended: "i j attr... a a_hat".
void write_adjacency(std::ostream& out, const PriorGraph& graph, std::span<const double> a, std::span<const double> a_hat);

}  // namespace subdetector
