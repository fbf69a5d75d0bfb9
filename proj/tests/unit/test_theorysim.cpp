#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "subdetector/errors.hpp"
#include "subdetector/theorysim/theorysim.hpp"

using namespace subdetector;
using namespace subdetector::theory;

namespace {

double row_distance(const std::vector<double>& f, std::size_t d, std::size_t a, std::size_t b) {
  double s = 0;
  for (std::size_t k = 0; k < d; ++k) s += (f[a * d + k] - f[b * d + k]) * (f[a * d + k] - f[b * d + k]);
  return std::sqrt(s);
}

TEST(Population, AnomaliesSitExactlyKSigmaFromReference) {
  for (double K : {0.5, 2.0, 7.0}) {
    TheoremConfig c;
    c.normals = 50;
    c.anomalies = 4;
    c.dim = 8;
    c.sigma = 1.7;
    c.K = K;
    c.mu.assign(8, 3.0);
    Population p = sample_population(c, 11);
    ASSERT_EQ(p.features.size(), p.rows() * 8);
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_NEAR(row_distance(p.features, 8, p.anomaly(k), p.reference(k)) / c.sigma, K, 1e-12);
  }
}

TEST(Population, NormalsMatchSigma) {
  TheoremConfig c;
  c.normals = 20000;
  c.anomalies = 0;
  c.dim = 4;
  c.sigma = 2.5;
  Population p = sample_population(c, 3);
  EXPECT_NEAR(mean_dimension_std(p.features, p.rows(), 4), 2.5, 0.05 * 2.5);
}

TEST(Population, SeededAndDeterministic) {
  TheoremConfig c;
  c.normals = 30;
  c.anomalies = 2;
  c.dim = 5;
  EXPECT_EQ(sample_population(c, 4).features, sample_population(c, 4).features);
  EXPECT_NE(sample_population(c, 4).features, sample_population(c, 5).features);
}

TEST(KernelPass, WideKernelIsDegenerate) {
  TheoremConfig c;
  c.normals = 20;
  c.anomalies = 2;
  c.dim = 3;
  Population p = sample_population(c, 1);
  PassResult r = kernel_message_pass(p, 1e300, std::nullopt, {});
  std::vector<double> mean(3, 0.0);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) mean[k] += p.features[i * 3 + k] / static_cast<double>(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r.features[i * 3 + k], mean[k], 1e-12);
  EXPECT_TRUE(r.degenerate);
  for (double v : r.post_ratios) EXPECT_TRUE(std::isnan(v));
}

TEST(KernelPass, IdenticalPointsStayPut) {
  Population p;
  p.normals = 2;
  p.dim = 3;
  p.features = {1, -2, 0.5, 1, -2, 0.5};
  PassResult r = kernel_message_pass(p, 0.3, std::nullopt, {});
  EXPECT_EQ(r.features, p.features);
  EXPECT_TRUE(r.degenerate);
}

TEST(KernelPass, NarrowKernelKeepsFeatures) {
  TheoremConfig c;
  c.normals = 40;
  c.anomalies = 2;
  c.dim = 6;
  Population p = sample_population(c, 2);
  // rows are far apart relative to the bandwidth, so each row keeps itself
  PassResult r = kernel_message_pass(p, 1e-4, std::nullopt, {});
  for (std::size_t k = 0; k < p.features.size(); ++k) EXPECT_NEAR(r.features[k], p.features[k], 1e-12);
  for (double v : r.post_ratios) EXPECT_GE(v, 0.0);
}

TEST(KernelPass, HugeDensityScaleMatchesPlainGraph) {
  TheoremConfig c;
  c.normals = 60;
  c.anomalies = 3;
  c.dim = 8;
  Population p = sample_population(c, 6);
  PassResult plain = kernel_message_pass(p, 40.0, std::nullopt, {});
  PassResult dense = kernel_message_pass(p, 40.0, 1e15, std::vector<double>(8, 0.0));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(plain.post_ratios[k], dense.post_ratios[k], 1e-9);
}

TEST(Bound, IncreasesWithK) {
  double prev = 0;
  for (double K = 2; K <= 12; K += 0.5) {
    auto b = delta_bound(K, 500, 0.0, 1.0);
    ASSERT_TRUE(b) << K;
    EXPECT_GT(*b, prev);
    prev = *b;
  }
  EXPECT_FALSE(delta_bound(1.0, 500, 0.0, 1.0));  // argument above 1
}

TEST(Bound, OversizedBandwidthHurtsTheoremOne) {
  TheoremConfig c;
  c.seed = 1;
  c.c_grid = {1.0};
  TheoremOutcome tight = compare_theorems(c);
  c.delta_factor = 100.0;
  TheoremOutcome loose = compare_theorems(c);
  EXPECT_LT(loose.theorem1_rate, tight.theorem1_rate);
}

TEST(Compare, OutcomeShapeAndFormats) {
  TheoremConfig c;
  c.normals = 80;
  c.anomalies = 2;
  c.dim = 8;
  c.trials = 3;
  c.delta = 30.0;
  c.c_grid = {1.0, 10.0};
  TheoremOutcome o = compare_theorems(c);
  ASSERT_EQ(o.rows.size(), 6u);
  EXPECT_EQ(o.sigma_star.size(), 3u);
  EXPECT_EQ(o.delta, 30.0);
  for (const auto& r : o.rows) {
    EXPECT_NEAR(r.pre_ratio, 5.0, 1e-12);
    EXPECT_TRUE(r.c == 1.0 || r.c == 10.0);
    EXPECT_GE(r.post_ratio_g, 0.0);
    EXPECT_GE(r.post_ratio_ghat, 0.0);
  }
  std::ostringstream csv;
  write_trials_csv(csv, o);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "trial,K,delta,c,pre_ratio,post_ratio_g,post_ratio_ghat");
  std::ostringstream rep;
  write_outcome(rep, c, o);
  EXPECT_NE(rep.str().find("theorem1_rate="), std::string::npos);

  TheoremOutcome again = compare_theorems(c);
  EXPECT_EQ(again.theorem1_rate, o.theorem1_rate);
  EXPECT_EQ(again.rows.back().post_ratio_ghat, o.rows.back().post_ratio_ghat);
}

TEST(Compare, ConfigErrors) {
  TheoremConfig c;
  c.trials = 0;
  EXPECT_THROW(compare_theorems(c), ConfigError);
  c = TheoremConfig{};
  c.K = 1.0;  // bound inapplicable and no explicit delta
  EXPECT_THROW(compare_theorems(c), ConfigError);
  c = TheoremConfig{};
  c.mu = {1.0, 2.0};  // wrong dimension
  EXPECT_THROW(compare_theorems(c), ConfigError);
}

}  // namespace
