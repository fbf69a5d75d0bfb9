#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "subdetector/encoder/checkpoint.hpp"
#include "subdetector/encoder/length_selection.hpp"
#include "subdetector/errors.hpp"
#include "subdetector/trainer/injection.hpp"
#include "subdetector/trainer/losses.hpp"
#include "subdetector/trainer/trainer.hpp"

using namespace subdetector;
using namespace subdetector::grad;
using subdetector::testing::probe;
using subdetector::testing::random_array;
namespace gc = subdetector::testing;

namespace {

// Noisy periodic series, z-normalized like the detector input.
TimeSeries periodic(std::size_t T, std::size_t period, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  TimeSeries s;
  for (std::size_t t = 0; t < T; ++t)
    s.values.push_back(std::sin(2 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(period)) + noise(rng));
  s.values = zscore(s.values);
  return s;
}

// Delta 2, four scales, L = 16, stride 4.
const WindowConfig kSmall{2, 3, 4};

ModelConfig small_model(std::size_t hidden = 4) {
  ModelConfig c;
  c.tcn.hidden = hidden;
  return c;
}

TEST(Injection, RateZeroLeavesSetUnchanged) {
  TimeSeries s = periodic(200, 20, 1);
  SubsequenceSet set = make_windows(s, kSmall);
  InjectionConfig cfg;
  cfg.rate = 0.0;
  AugmentedSet aug = inject(set, cfg);
  EXPECT_EQ(aug.batch.count(), 0u);
  EXPECT_EQ(aug.set.count(), set.count());
  EXPECT_TRUE(std::equal(set.matrix().begin(), set.matrix().end(), aug.set.matrix().begin()));
  for (auto y : aug.y) EXPECT_EQ(y, 0);
}

TEST(Injection, OriginalsByteIdenticalAndCountsRounded) {
  TimeSeries s = periodic(400, 20, 2);
  SubsequenceSet set = make_windows(s, kSmall);
  InjectionConfig cfg;
  cfg.rate = 0.25;
  cfg.seed = 5;
  AugmentedSet aug = inject(set, cfg);
  const std::size_t N = set.count(), L = set.length();
  EXPECT_EQ(aug.batch.count(), static_cast<std::size_t>(std::llround(0.25 * N)));
  EXPECT_EQ(std::memcmp(set.matrix().data(), aug.set.matrix().data(), N * L * sizeof(double)), 0);
  std::set<std::size_t> distinct(aug.batch.sources.begin(), aug.batch.sources.end());
  EXPECT_EQ(distinct.size(), aug.batch.count());
  for (std::size_t k = 0; k < aug.batch.count(); ++k) {
    EXPECT_EQ(aug.y[N + k], 1);
    EXPECT_EQ(aug.set.starts()[N + k], set.starts()[aug.batch.sources[k]]);
  }
  cfg.rate = 0.001;
  EXPECT_EQ(inject(set, cfg).batch.count(), 1u);
}

TEST(Injection, FlipsAreInvolutions) {
  std::mt19937_64 rng(3);
  InjectionConfig cfg;
  const std::vector<double> pal{1, 4, -2, 7, -2, 4, 1};
  EXPECT_EQ(corrupt(pal, InjectionType::LeftRight, cfg, rng), pal);
  const std::vector<double> w{0.5, -1, 3, 2, 0};
  auto once = corrupt(w, InjectionType::UpDown, cfg, rng);
  auto twice = corrupt(once, InjectionType::UpDown, cfg, rng);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(twice[k], w[k], 1e-12);
  EXPECT_NEAR(once[2], 2 * 0.9 - 3, 1e-12);  // reflected about the mean 0.9
}

TEST(Injection, SpikeTouchesOnePointWithinMagnitude) {
  std::mt19937_64 rng(4);
  InjectionConfig cfg;
  std::vector<double> w(40);
  for (std::size_t t = 0; t < w.size(); ++t) w[t] = std::sin(0.3 * static_cast<double>(t));
  double mean = 0, var = 0;
  for (double v : w) mean += v / 40;
  for (double v : w) var += (v - mean) * (v - mean) / 40;
  for (int rep = 0; rep < 20; ++rep) {
    auto c = corrupt(w, InjectionType::SpikeDip, cfg, rng);
    std::size_t changed = 0;
    for (std::size_t t = 0; t < w.size(); ++t) {
      if (c[t] == w[t]) continue;
      ++changed;
      const double m = std::fabs(c[t] - w[t]) / std::sqrt(var);
      EXPECT_GE(m, 3.0 - 1e-9);
      EXPECT_LE(m, 6.0 + 1e-9);
    }
    EXPECT_EQ(changed, 1u);
  }
}

TEST(Injection, EveryTypeKeepsLengthAndChangesWindow) {
  std::mt19937_64 rng(5);
  InjectionConfig cfg;
  std::vector<double> w(64);
  for (std::size_t t = 0; t < w.size(); ++t) w[t] = std::sin(0.2 * static_cast<double>(t)) + 0.01 * static_cast<double>(t);
  for (InjectionType type : all_injection_types()) {
    auto c = corrupt(w, type, cfg, rng);
    ASSERT_EQ(c.size(), w.size()) << to_string(type);
    for (double v : c) EXPECT_TRUE(std::isfinite(v));
    EXPECT_NE(c, w) << to_string(type);
    EXPECT_EQ(parse_injection_type(to_string(type)), type);
  }
  EXPECT_THROW(parse_injection_type("sideways"), ConfigError);
  cfg.rate = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

double hsc_value(std::vector<double> s, std::vector<std::uint8_t> y) {
  Tape t;
  const std::size_t n = s.size();
  std::vector<double> w(n, 1.0);
  return hsc_loss(t.constant(DenseArray({n}, std::move(s))), y, w).value().item();
}

TEST(Hsc, Examples) {
  EXPECT_EQ(hsc_value({0, 0, 0}, {0, 0, 0}), 0.0);
  EXPECT_LT(hsc_value({60.0}, {1}), 1e-20);
  EXPECT_NEAR(hsc_value({std::log(2.0)}, {1}), std::log(2.0), 1e-12);
  EXPECT_NEAR(hsc_value({0.0}, {1}), -std::log(1e-7), 1e-6);  // clamped, finite
  EXPECT_NEAR(hsc_value({1.5, 0.2}, {0, 0}), 0.85, 1e-12);
}

TEST(Hsc, NonNegativeAndGradientSigns) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> s(8);
    std::vector<std::uint8_t> y(8);
    for (std::size_t i = 0; i < 8; ++i) s[i] = u(rng), y[i] = i % 3 == 0;
    std::vector<double> w = hsc_weights(y, {}, LossWeights{});
    Tape t;
    Var sv = t.input(DenseArray({8}, s));
    Var loss = hsc_loss(sv, y, w);
    EXPECT_GE(loss.value().item(), 0.0);
    t.backward(loss);
    for (std::size_t i = 0; i < 8; ++i) {
      if (y[i]) EXPECT_LT(t.grad(sv)[i], 0.0);
      else EXPECT_GT(t.grad(sv)[i], 0.0);
    }
  }
}

TEST(Hsc, Weights) {
  LossWeights lw;
  std::vector<std::uint8_t> y{0, 0, 1}, normal{1, 0, 1};
  EXPECT_EQ(hsc_weights(y, normal, lw), (std::vector<double>{2.0, 1.0, 1.0}));
  EXPECT_EQ(hsc_weights(y, {}, lw), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(Regularizers, Examples) {
  EdgeIndex two;
  two.offsets = {0, 1, 2};
  two.src = {1, 0};
  two.dst = {0, 1};
  Tape t;
  EXPECT_EQ(length_loss(t.constant(DenseArray({2, 3}, 0.4)), two).value().item(), 0.0);
  EXPECT_EQ(length_loss(t.constant(DenseArray({2, 3}, std::vector<double>{0, 0, 0, 0, 1, 0})), two).value().item(), 1.0);
  const std::vector<double> x{1, -2, 3, 0.5};
  EXPECT_EQ(reconstruction_loss(t.constant(DenseArray({2, 2}, x)), x).value().item(), 0.0);
  EXPECT_NEAR(reconstruction_loss(t.constant(DenseArray({2, 2}, 0.0)), x).value().item(), (1 + 4 + 9 + 0.25) / 4, 1e-15);
}

TEST(Score, OneNeighbourAtDistanceTwo) {
  EdgeIndex e;
  e.offsets = {0, 1, 2};
  e.src = {1, 0};
  e.dst = {0, 1};
  Tape t;
  Var s = neighbor_scores(t.constant(DenseArray({2, 2}, std::vector<double>{0, 0, 2, 0})), e);
  EXPECT_EQ(s.value()[0], 4.0);
  Var flat = neighbor_scores(t.constant(DenseArray({2, 2}, 1.3)), e);
  EXPECT_EQ(flat.value()[1], 0.0);
}

TEST(Model, SharedEncodingMatchesPerWindow) {
  for (std::size_t stride : {1, 4, 16, 20}) {
    TimeSeries s = periodic(90, 12, 7);
    const WindowConfig wc{2, 3, stride};
    GraphData data(s, wc, 2);
    Model model(small_model(), wc, data.set().count(), data.graph().attr_dim, std::nullopt, 3);
    std::mt19937_64 rng(1);
    InjectedBatch inj = sample_injections(data.set(), InjectionConfig{.rate = 0.2}, rng);
    Tape t;
    Var zs = model.encode(t, data, &inj, false);
    const std::size_t N = data.set().count(), L = data.set().length(), M = inj.count();
    ASSERT_EQ(zs.shape(), (Shape{N + M, 4, 16}));
    std::vector<double> all(data.set().matrix().begin(), data.set().matrix().end());
    all.insert(all.end(), inj.windows.begin(), inj.windows.end());
    DenseArray r = tcn_forward(model.tcn, all, N + M, L);
    for (std::size_t i = 0; i < N + M; ++i) {
      for (std::size_t p = 0; p < 4; ++p) {
        const std::size_t l = wc.scale_length(p);
        DenseArray prefix({1, l, 4});
        for (std::size_t k = 0; k < l; ++k)
          for (std::size_t c = 0; c < 4; ++c) prefix.at(0, k, c) = r.at(i, k, c);
        Var ref = stats_pool(t.constant(prefix));
        for (std::size_t f = 0; f < 16; ++f) ASSERT_NEAR(zs.value().at(i, p, f), ref.value()[f], 1e-9) << stride;
      }
    }
  }
}

// The whole chain on a 10-node instance: encoder, length selection, adjacency,
// refinement, message pass, decoder and all three losses.
TEST(Model, FullPipelineGradient) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TimeSeries s = periodic(52, 13, 100 + seed);
    s.period = 13;
    GraphData data(s, kSmall, 2);
    ASSERT_EQ(data.set().count(), 10u);
    Model model(small_model(8), kSmall, 10, data.graph().attr_dim, s.period, seed);
    std::mt19937_64 rng(seed);
    gc::jitter(model.all_params(), rng);
    InjectedBatch inj = sample_injections(data.set(), InjectionConfig{.rate = 0.2, .seed = 1}, rng);
    NodeBatch batch = make_batch(data, &inj);
    const std::vector<double> w = hsc_weights(batch.y, {}, LossWeights{});
    std::vector<std::size_t> rows(10);
    for (std::size_t i = 0; i < 10; ++i) rows[i] = i;
    auto loss = [&](Tape& t) {
      Model::Outputs out = model.forward(t, data, batch, true, true);
      Var dec = reconstruction_loss(model.dagnn.decode(t, gather_rows(out.h_out, rows)), data.set().matrix());
      return hsc_loss(out.scores, batch.y, w) + dec + 0.2 * length_loss(t.param(model.lengths), data.edges());
    };
    gc::GradientCheck c = gc::param_gradient_check(model.all_params(), loss, rng, 8);
    EXPECT_LT(c.error, 1e-4) << seed;
    EXPECT_LT(c.kink_error, 1e-2) << seed;
  }
}

TEST(Model, AblationsRouteThroughExpectedPaths) {
  TimeSeries s = periodic(120, 12, 10);
  GraphData data(s, kSmall, 2);
  const std::size_t N = data.set().count();
  ModelConfig cfg = small_model();
  cfg.ablation.no_graph = true;
  Model plain(cfg, kSmall, N, data.graph().attr_dim, std::nullopt, 1);
  Tape t;
  auto out = plain.forward(t, data, make_batch(data), false, false);
  EXPECT_EQ(out.h_out.value(), out.h.value());
  EXPECT_FALSE(out.adjacency.has_value());
  // edge and density MLPs (two layers each) plus one message-passing layer
  EXPECT_EQ(plain.theta().size() + 2 * 2 * 2 + 3, Model(small_model(), kSmall, N, 4, std::nullopt, 1).theta().size());

  cfg = small_model();
  cfg.ablation.fixed_length = 9;  // nearest scale is 8
  Model fixed(cfg, kSmall, N, data.graph().attr_dim, std::nullopt, 1);
  EXPECT_FALSE(fixed.config().ablation.learns_lengths());
  Var zs = fixed.encode(t, data, nullptr, false);
  auto f = fixed.propagate(t, zs, make_batch(data), false, false);
  Var expect = single_length(zs, 2);
  EXPECT_EQ(f.z.value(), expect.value());
}

TrainConfig quick_train(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 3;
  c.steps_per_epoch = 2;
  c.seed = seed;
  c.injection.seed = seed;
  return c;
}

TEST(Train, DeterministicUnderSeed) {
  TimeSeries s = periodic(160, 16, 11);
  s.period = 16;
  GraphData data(s, kSmall, 3);
  auto run = [&](std::uint64_t seed) {
    Model model(small_model(), kSmall, data.set().count(), data.graph().attr_dim, s.period, seed);
    return train(model, data, quick_train(seed));
  };
  TrainReport a = run(1), b = run(1), c = run(2);
  ASSERT_EQ(a.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(a.epochs[e].loss, b.epochs[e].loss);
    EXPECT_EQ(a.epochs[e].loss_dec, b.epochs[e].loss_dec);
    EXPECT_EQ(a.epochs[e].loss_len, b.epochs[e].loss_len);
  }
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_NE(a.scores, c.scores);
}

TEST(Train, NonFiniteLossAborts) {
  TimeSeries s = periodic(160, 16, 12);
  GraphData data(s, kSmall, 3);
  Model model(small_model(), kSmall, data.set().count(), data.graph().attr_dim, std::nullopt, 1);
  model.head.layers[0].weight.value[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(model, data, quick_train(1));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos) << e.what();
  }
  TrainConfig bad = quick_train(1);
  bad.epochs = 0;
  EXPECT_THROW(train(model, data, bad), ConfigError);
}

TEST(Train, NormalOnlyLossTrendsDown) {
  TimeSeries s = periodic(240, 24, 13);
  GraphData data(s, kSmall, 3);
  Model model(small_model(8), kSmall, data.set().count(), data.graph().attr_dim, std::nullopt, 2);
  TrainConfig c;
  c.epochs = 30;
  c.steps_per_epoch = 2;
  c.loss.lambda = 0;
  c.loss.mu = 0;
  c.injection.rate = 0;
  TrainReport r = train(model, data, c);
  std::vector<double> avg;
  for (std::size_t e = 4; e < r.epochs.size(); ++e) {
    double m = 0;
    for (std::size_t k = e - 4; k <= e; ++k) m += r.epochs[k].loss / 5;
    avg.push_back(m);
  }
  for (std::size_t k = 1; k < avg.size(); ++k) EXPECT_LE(avg[k], avg[k - 1]) << k;
}

TEST(Train, InjectedAnomalyScoresAboveNormal) {
  // Periodic series with one amplitude burst; windows covering it should score higher.
  TimeSeries s = periodic(1200, 40, 14);
  s.period = 40;
  for (std::size_t t = 600; t < 640; ++t) s.values[t] += (t % 2 ? 2.5 : -2.5);
  s.labels.emplace(1200, 0);
  for (std::size_t t = 600; t < 640; ++t) (*s.labels)[t] = 1;
  DetectorConfig cfg;
  cfg.model = small_model(16);
  cfg.train.epochs = 5;
  cfg.train.steps_per_epoch = 5;
  cfg.train.seed = 3;
  Detection d = detect(s, cfg);
  const auto& y = *d.data->set().window_labels();
  double pos = 0, neg = 0;
  std::size_t np = 0, nn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    (y[i] ? pos : neg) += d.report.scores[i];
    (y[i] ? np : nn) += 1;
  }
  ASSERT_GT(np, 0u);
  EXPECT_GT(pos / np, neg / nn);
}

TEST(Train, CheckpointRestoresScores) {
  TimeSeries s = periodic(160, 16, 15);
  GraphData data(s, kSmall, 3);
  Model a(small_model(), kSmall, data.set().count(), data.graph().attr_dim, std::nullopt, 1);
  TrainReport r = train(a, data, quick_train(1));
  const auto path = std::filesystem::temp_directory_path() / "subdetector_model_ckpt.bin";
  save_checkpoint(path, a.all_params());
  Model b(small_model(), kSmall, data.set().count(), data.graph().attr_dim, std::nullopt, 99);
  load_checkpoint(path, b.all_params());
  EXPECT_EQ(score(b, data), r.scores);
  std::filesystem::remove(path);
}

}  // namespace
