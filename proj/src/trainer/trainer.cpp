#include "subdetector/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "subdetector/errors.hpp"
#include "subdetector/gradcore/adam.hpp"

namespace subdetector {
namespace {

void require_finite(double v, const char* component, std::size_t epoch) {
  if (!std::isfinite(v)) {
    throw TrainingError("non-finite " + std::string(component) + " at epoch " + std::to_string(epoch + 1));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0 || steps_per_epoch == 0) throw ConfigError("epochs and steps per epoch must be positive");
  if (!(lr_theta > 0 && lr_lengths > 0)) throw ConfigError("learning rates must be positive");
  loss.validate();
  injection.validate();
}

TrainReport train(Model& model, const GraphData& data, const TrainConfig& config) {
  config.validate();
  const std::size_t N = data.set().count();
  if (model.lengths.value.dim(0) != N) throw ConfigError("model was built for a different number of windows");
  const bool learn_lengths = model.config().ablation.learns_lengths();
  const std::span<const double> originals = data.set().matrix();
  std::vector<std::size_t> original_rows(N);
  for (std::size_t i = 0; i < N; ++i) original_rows[i] = i;

  // Injection has its own generator so nothing else can shift the draws.
  std::mt19937_64 inject_rng(config.seed ^ 0x6a09e667f3bcc908ULL);
  grad::Adam adam_theta, adam_lengths;
  ParamList theta = model.theta(), lengths = model.length_params();
  TrainReport report;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    InjectedBatch batch = sample_injections(data.set(), config.injection, inject_rng);
    NodeBatch nodes = make_batch(data, &batch);
    const std::vector<double> weights = hsc_weights(nodes.y, {}, config.loss);
    EpochLog log;
    log.epoch = epoch + 1;

    if (learn_lengths) {
      // The statistics do not depend on the embeddings, so one encoder pass serves every step.
      grad::DenseArray zs;
      {
        grad::Tape tape;
        zs = model.encode(tape, data, &batch, false).value();
      }
      for (std::size_t step = 0; step < config.steps_per_epoch; ++step) {
        grad::Tape tape;
        Model::Outputs out = model.propagate(tape, tape.constant(zs), nodes, false, true);
        grad::Var hsc = hsc_loss(out.scores, nodes.y, weights);
        grad::Var len = length_loss(tape.param(model.lengths), data.edges());
        grad::Var total = hsc + config.loss.mu * len;
        require_finite(hsc.value().item(), "loss", epoch);
        require_finite(len.value().item(), "loss_len", epoch);
        log.loss_len += len.value().item() / static_cast<double>(config.steps_per_epoch);
        tape.backward(total);
        adam_lengths.step(lengths, config.lr_lengths);
      }
    }

    for (std::size_t step = 0; step < config.steps_per_epoch; ++step) {
      grad::Tape tape;
      Model::Outputs out = model.forward(tape, data, nodes, true, false);
      grad::Var hsc = hsc_loss(out.scores, nodes.y, weights);
      grad::Var total = hsc;
      double dec_value = 0.0;
      if (config.loss.lambda > 0) {
        grad::Var recon = model.dagnn.decode(tape, grad::gather_rows(out.h_out, original_rows));
        grad::Var dec = reconstruction_loss(recon, originals);
        dec_value = dec.value().item();
        require_finite(dec_value, "loss_dec", epoch);
        total = total + config.loss.lambda * dec;
      }
      require_finite(hsc.value().item(), "loss", epoch);
      log.loss += hsc.value().item() / static_cast<double>(config.steps_per_epoch);
      log.loss_dec += dec_value / static_cast<double>(config.steps_per_epoch);
      tape.backward(total);
      adam_theta.step(theta, config.lr_theta);
    }
    if (!learn_lengths) {
      grad::Tape tape;
      log.loss_len = length_loss(tape.constant(model.lengths.value), data.edges()).value().item();
    }
    report.epochs.push_back(log);
    if (config.on_epoch) config.on_epoch(log.epoch, log.loss);
  }
  report.scores = score(model, data);
  return report;
}

std::vector<double> score(Model& model, const GraphData& data) {
  NodeBatch nodes = make_batch(data);
  grad::Tape tape;
  Model::Outputs out = model.forward(tape, data, nodes, false, false);
  const auto s = out.scores.value().data();
  return std::vector<double>(s.begin(), s.end());
}

Representations representations(Model& model, const GraphData& data) {
  NodeBatch nodes = make_batch(data);
  grad::Tape tape;
  Model::Outputs out = model.forward(tape, data, nodes, false, false);
  return {out.h.value(), out.h_out.value()};
}

void write_metrics_log(std::ostream& out, const std::vector<EpochLog>& epochs) {
  out << "epoch,loss,loss_dec,loss_len\n";
  char buf[128];
  for (const EpochLog& e : epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.loss, e.loss_dec, e.loss_len);
    out << buf;
  }
}

Detection prepare(const TimeSeries& series, const DetectorConfig& config) {
  TimeSeries normalized = series;
  normalized.values = zscore(series.values);
  const WindowConfig window = config.window ? *config.window : WindowConfig::for_period(series.period);
  Detection d;
  d.data = std::make_unique<GraphData>(normalized, window, config.K);
  d.model = std::make_unique<Model>(config.model, window, d.data->set().count(), d.data->graph().attr_dim, series.period,
                                    config.train.seed);
  return d;
}

Detection detect(const TimeSeries& series, const DetectorConfig& config) {
  Detection d = prepare(series, config);
  d.report = train(*d.model, *d.data, config.train);
  return d;
}

}  // namespace subdetector
