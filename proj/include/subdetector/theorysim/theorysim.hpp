#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace subdetector::theory {

struct TheoremConfig {
  std::size_t normals = 500;  // N
  std::size_t anomalies = 5;  // M
  std::size_t dim = 32;       // d
  double sigma = 1.0;
  std::vector<double> mu;     // empty means the zero vector
  double K = 5.0;
  // Kernel bandwidth. When unset, delta_factor times the closed-form bound is used.
  std::optional<double> delta;
  double delta_factor = 0.9;
  std::vector<double> c_grid;  // empty means logspace(-1, 4, 26)
  std::size_t trials = 20;
  std::uint64_t seed = 0;

  void validate() const;
  double mu_norm() const;
};

// Rows: normals [0, N), references [N, N+M), anomalies [N+M, N+2M).
// anomaly k = reference k + eps_k with |eps_k| = K * sigma in a uniform random direction.
struct Population {
  std::size_t normals = 0, anomalies = 0, dim = 0;
  std::vector<double> features;  // (N + 2M) x d, row-major

  std::size_t rows() const { return normals + 2 * anomalies; }
  std::size_t reference(std::size_t k) const { return normals + k; }
  std::size_t anomaly(std::size_t k) const { return normals + anomalies + k; }
};

Population sample_population(const TheoremConfig& config, std::uint64_t seed);

struct PassResult {
  std::vector<double> features;     // D^-1 A F
  std::vector<double> post_ratios;  // per anomaly, NaN when degenerate
  double sigma_star = 0.0;          // mean per-dimension std of transformed non-anomalous rows
  bool degenerate = false;          // sigma_star at roundoff level of the input spread
};

// Fully connected message pass with self loops, A_ij = exp(-|f_i - f_j|^2 / delta),
// optionally times exp(-|f_j - mu|^2 / c) for the density-aware graph.
PassResult kernel_message_pass(const Population& pop, double delta, std::optional<double> c,
                               const std::vector<double>& mu);

// Mean over dimensions of the per-dimension population std of the non-anomalous rows.
double mean_dimension_std(const std::vector<double>& features, std::size_t rows, std::size_t dim);

// 0 < delta < -K^2 / log(1 - sqrt((N^2 + 2N)(|mu|^2 + sigma^2) / (N^2 (|mu|^2 + K^2 sigma^2)))).
// Empty when the square-root argument falls outside (0, 1).
std::optional<double> delta_bound(double K, std::size_t N, double mu_norm, double sigma);

struct AnomalyRow {
  std::size_t trial = 0;
  double K = 0, delta = 0, c = 0;
  double pre_ratio = 0, post_ratio_g = 0, post_ratio_ghat = 0;
};

struct TheoremOutcome {
  std::vector<AnomalyRow> rows;          // one per anomaly per trial, c = best c of that trial
  std::vector<double> sigma_empirical;   // per trial, before message passing
  std::vector<double> sigma_star;        // per trial, plain graph
  std::vector<double> sigma_star_hat;    // per trial, density-aware graph at the best c
  double delta = 0.0;
  double theorem1_rate = 0.0;            // fraction with post_ratio_g > pre_ratio
  double theorem2_rate = 0.0;            // fraction with post_ratio_ghat > post_ratio_g
  double variance_reduction_rate = 0.0;  // fraction of trials with sigma_star < sigma_empirical
  std::size_t degenerate_trials = 0;
};

// Both graphs on identical samples per trial; for the density-aware graph the
// c with the most wins (then the largest mean ratio) is kept per trial.
// Throws ConfigError when delta is unset and the bound is inapplicable.
TheoremOutcome compare_theorems(const TheoremConfig& config);

void write_outcome(std::ostream& out, const TheoremConfig& config, const TheoremOutcome& outcome);
// "trial,K,delta,c,pre_ratio,post_ratio_g,post_ratio_ghat"
void write_trials_csv(std::ostream& out, const TheoremOutcome& outcome);

}  // namespace subdetector::theory
