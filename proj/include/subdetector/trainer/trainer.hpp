#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "subdetector/trainer/losses.hpp"
#include "subdetector/trainer/model.hpp"

namespace subdetector {

struct TrainConfig {
  std::size_t epochs = 10;
  // Full-batch Adam steps per phase and epoch.
  std::size_t steps_per_epoch = 10;
  double lr_theta = 1e-4;
  double lr_lengths = 5e-4;
  LossWeights loss;
  InjectionConfig injection;
  std::uint64_t seed = 0;
  // Optional per-epoch progress hook.
  std::function<void(std::size_t epoch, double loss)> on_epoch;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;      // HSC term, mean over the epoch's parameter steps
  double loss_dec = 0.0;  // reconstruction term, same steps
  double loss_len = 0.0;  // length-embedding term, mean over the epoch's embedding steps
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  std::vector<double> scores;  // per original window, after training
};

// Alternating optimization. Each epoch draws a fresh injection batch, then runs
// the embedding phase (HSC + mu * length loss over the length embeddings, model
// weights frozen) followed by the parameter phase (HSC + lambda * reconstruction
// over all other weights, embeddings frozen). Throws TrainingError on a non-finite loss.
TrainReport train(Model& model, const GraphData& data, const TrainConfig& config);

// Per-window anomaly scores of the original windows.
std::vector<double> score(Model& model, const GraphData& data);

// Node representations before and after message passing, original windows only.
struct Representations {
  grad::DenseArray h, h_out;
};
Representations representations(Model& model, const GraphData& data);

// "epoch,loss,loss_dec,loss_len" with a header line.
void write_metrics_log(std::ostream& out, const std::vector<EpochLog>& epochs);

struct DetectorConfig {
  std::optional<WindowConfig> window;  // derived from the series period when unset
  std::size_t K = 5;
  ModelConfig model;
  TrainConfig train;
};

struct Detection {
  std::unique_ptr<GraphData> data;
  std::unique_ptr<Model> model;
  TrainReport report;
};

// z-normalizes the series, builds windows and the prior graph, trains and scores.
Detection detect(const TimeSeries& series, const DetectorConfig& config);

// Same preparation without training; used when parameters come from a checkpoint.
Detection prepare(const TimeSeries& series, const DetectorConfig& config);

}  // namespace subdetector
