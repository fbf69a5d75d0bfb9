#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "subdetector/dagnn/dagnn.hpp"
#include "subdetector/encoder/tcn.hpp"
#include "subdetector/trainer/injection.hpp"

namespace subdetector {

// Model variations used for ablation studies.
struct AblationConfig {
  bool no_graph = false;             // score directly on H, no message passing
  bool no_adaptive = false;          // uniform weights on the prior support
  bool no_density = false;           // message passing on A instead of the refined weights
  bool no_length_selection = false;  // plain average of the scale representations
  std::optional<std::size_t> fixed_length;  // one scale only, the one nearest this length

  // fixed_length implies no_length_selection.
  void normalize();
  bool learns_lengths() const { return !no_length_selection && !fixed_length; }
};

struct ModelConfig {
  TcnConfig tcn;
  DagnnConfig dagnn;
  AblationConfig ablation;
  // One-hot start for the length embeddings (weight `length_prior_logit` on this scale).
  std::optional<std::size_t> length_prior;
  double length_prior_logit = 1.0;
};

// Windows, distances and prior graph of one (already normalized) series.
class GraphData {
 public:
  GraphData(const TimeSeries& series, const WindowConfig& window, std::size_t K);

  const TimeSeries& series() const { return series_; }
  const SubsequenceSet& set() const { return *set_; }
  const DistanceProfile& profile() const { return *profile_; }
  const PriorGraph& graph() const { return graph_; }
  const EdgeIndex& edges() const { return edges_; }

 private:
  TimeSeries series_;
  std::unique_ptr<SubsequenceSet> set_;
  std::unique_ptr<DistanceProfile> profile_;
  PriorGraph graph_;
  EdgeIndex edges_;
};

// Node set for one forward pass: the original windows plus optional injected
// copies, each copy wired to its source's in-neighbours.
struct NodeBatch {
  EdgeIndex edges;
  grad::DenseArray attrs;                // [E, attr_dim]
  std::vector<std::size_t> positions;    // start position per node
  std::vector<std::size_t> length_rows;  // row of the length embedding per node
  std::vector<std::uint8_t> y;           // 1 for injected copies
  const InjectedBatch* injected = nullptr;

  std::size_t nodes() const { return positions.size(); }
};

NodeBatch make_batch(const GraphData& data, const InjectedBatch* injected = nullptr);

class Model {
 public:
  Model(const ModelConfig& config, const WindowConfig& window, std::size_t nodes, std::size_t attr_dim,
        std::optional<std::size_t> period, std::uint64_t seed);

  struct Outputs {
    grad::Var z;       // [N, 4d] length-selected statistics
    grad::Var h;       // [N, d]
    grad::Var h_out;   // [N, d] after message passing (h itself when no_graph)
    grad::Var scores;  // [N]
    std::optional<AdjacencyTerms> adjacency;
  };

  // Multi-scale statistics [N, P+1, 4d] for the batch's nodes.
  grad::Var encode(grad::Tape& tape, const GraphData& data, const InjectedBatch* injected, bool trainable);
  Outputs propagate(grad::Tape& tape, grad::Var zs, const NodeBatch& batch, bool train_theta, bool train_lengths);
  Outputs forward(grad::Tape& tape, const GraphData& data, const NodeBatch& batch, bool train_theta, bool train_lengths);

  ParamList theta();
  ParamList length_params() { return {&lengths}; }
  ParamList all_params();

  const ModelConfig& config() const { return config_; }
  const WindowConfig& window() const { return window_; }
  std::optional<std::size_t> period() const { return period_; }

  Tcn tcn;
  Mlp head;
  Dagnn dagnn;
  grad::TrainableParam lengths;  // [N, P+1]

 private:
  ModelConfig config_;
  WindowConfig window_;
  std::optional<std::size_t> period_;
  std::vector<std::size_t> scale_lengths_;
};

}  // namespace subdetector
