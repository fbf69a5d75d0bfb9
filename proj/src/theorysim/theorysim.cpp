#include "subdetector/theorysim/theorysim.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "subdetector/errors.hpp"

namespace subdetector::theory {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  // splitmix64 step so neighbouring trials get unrelated streams
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 25; ++k) g.push_back(std::pow(10.0, -1.0 + 5.0 * k / 25.0));
  return g;
}

std::vector<double> mean_vector(const TheoremConfig& c) { return c.mu.empty() ? std::vector<double>(c.dim, 0.0) : c.mu; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double distance(const std::vector<double>& f, std::size_t a, std::size_t b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += (f[a * d + k] - f[b * d + k]) * (f[a * d + k] - f[b * d + k]);
  return std::sqrt(s);
}

// D^-1 A F from precomputed squared distances; log_w holds the per-source log density
// factor. Each row is shifted by its max before exponentiating so no row underflows.
PassResult pass(const Population& pop, const RowMatrix& sq, double delta, const Eigen::VectorXd& log_w) {
  const auto n = static_cast<Eigen::Index>(pop.rows()), d = static_cast<Eigen::Index>(pop.dim);
  RowMatrix a = (-sq.array() / delta).rowwise() + log_w.transpose().array();
  a = (a.colwise() - a.rowwise().maxCoeff()).array().exp();
  // Copied so the product runs on Eigen-aligned storage.
  const RowMatrix f = Eigen::Map<const RowMatrix>(pop.features.data(), n, d);
  RowMatrix out = (a * f).array().colwise() / a.rowwise().sum().array();
  PassResult r;
  r.features.assign(out.data(), out.data() + out.size());
  r.sigma_star = mean_dimension_std(r.features, pop.normals + pop.anomalies, pop.dim);
  // A collapsed output keeps roundoff-level spread; compare against the input spread.
  const double input_std = mean_dimension_std(pop.features, pop.normals + pop.anomalies, pop.dim);
  r.degenerate = !(r.sigma_star > 1e-12 * input_std);
  for (std::size_t k = 0; k < pop.anomalies; ++k) {
    const double gap = distance(r.features, pop.anomaly(k), pop.reference(k), pop.dim);
    r.post_ratios.push_back(r.degenerate ? std::numeric_limits<double>::quiet_NaN() : gap / r.sigma_star);
  }
  return r;
}

RowMatrix squared_distances(const Population& pop) {
  const std::size_t n = pop.rows(), d = pop.dim;
  RowMatrix sq(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    sq(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double x = pop.features[i * d + k] - pop.features[j * d + k];
        s += x * x;
      }
      sq(i, j) = sq(j, i) = s;
    }
  }
  return sq;
}

Eigen::VectorXd log_density_weights(const Population& pop, std::optional<double> c, const std::vector<double>& mu) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pop.rows()));
  if (!c) return w;
  for (std::size_t j = 0; j < pop.rows(); ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < pop.dim; ++k) s += (pop.features[j * pop.dim + k] - mu[k]) * (pop.features[j * pop.dim + k] - mu[k]);
    w[static_cast<Eigen::Index>(j)] = -s / *c;
  }
  return w;
}

}  // namespace

void TheoremConfig::validate() const {
  if (trials == 0) throw ConfigError("theorem simulation needs at least one trial");
  if (dim == 0 || normals == 0) throw ConfigError("population size and dimension must be positive");
  if (normals < 10 * anomalies) throw ConfigError("normal count must be at least ten times the anomaly count");
  if (!(K > 0) || !(sigma > 0)) throw ConfigError("K and sigma must be positive");
  if (delta && !(*delta > 0)) throw ConfigError("delta must be positive");
  if (!(delta_factor > 0)) throw ConfigError("delta factor must be positive");
  if (!mu.empty() && mu.size() != dim) throw ConfigError("mean vector must have the feature dimension");
  for (double c : c_grid)
    if (!(c > 0)) throw ConfigError("density bandwidths must be positive");
}

double TheoremConfig::mu_norm() const {
  double s = 0.0;
  for (double v : mu) s += v * v;
  return std::sqrt(s);
}

Population sample_population(const TheoremConfig& config, std::uint64_t seed) {
  config.validate();
  const std::vector<double> mu = mean_vector(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Population pop;
  pop.normals = config.normals;
  pop.anomalies = config.anomalies;
  pop.dim = config.dim;
  const std::size_t d = config.dim;
  pop.features.resize(pop.rows() * d);
  for (std::size_t r = 0; r < config.normals + config.anomalies; ++r)
    for (std::size_t k = 0; k < d; ++k) pop.features[r * d + k] = mu[k] + config.sigma * gauss(rng);
  for (std::size_t a = 0; a < config.anomalies; ++a) {
    std::vector<double> dir(d);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : dir) {
        v = gauss(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    const double scale = config.K * config.sigma / norm;
    for (std::size_t k = 0; k < d; ++k) {
      pop.features[pop.anomaly(a) * d + k] = pop.features[pop.reference(a) * d + k] + scale * dir[k];
    }
  }
  return pop;
}

double mean_dimension_std(const std::vector<double>& features, std::size_t rows, std::size_t dim) {
  double total = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    double m = 0.0;
    for (std::size_t r = 0; r < rows; ++r) m += features[r * dim + k];
    m /= static_cast<double>(rows);
    double v = 0.0;
    for (std::size_t r = 0; r < rows; ++r) v += (features[r * dim + k] - m) * (features[r * dim + k] - m);
    total += std::sqrt(v / static_cast<double>(rows));
  }
  return total / static_cast<double>(dim);
}

PassResult kernel_message_pass(const Population& pop, double delta, std::optional<double> c,
                               const std::vector<double>& mu) {
  if (!(delta > 0)) throw ConfigError("delta must be positive");
  std::vector<double> m = mu.empty() ? std::vector<double>(pop.dim, 0.0) : mu;
  return pass(pop, squared_distances(pop), delta, log_density_weights(pop, c, m));
}

std::optional<double> delta_bound(double K, std::size_t N, double mu_norm, double sigma) {
  const double n = static_cast<double>(N), m2 = mu_norm * mu_norm, s2 = sigma * sigma;
  const double arg = (n * n + 2.0 * n) * (m2 + s2) / (n * n * (m2 + K * K * s2));
  if (!(arg > 0.0 && arg < 1.0)) return std::nullopt;
  return -K * K / std::log(1.0 - std::sqrt(arg));
}

TheoremOutcome compare_theorems(const TheoremConfig& config) {
  config.validate();
  TheoremOutcome out;
  if (config.delta) {
    out.delta = *config.delta;
  } else {
    auto bound = delta_bound(config.K, config.normals, config.mu_norm(), config.sigma);
    if (!bound) throw ConfigError("the delta bound is inapplicable for this configuration; pass delta explicitly");
    out.delta = config.delta_factor * *bound;
  }
  const std::vector<double> grid = config.c_grid.empty() ? default_grid() : config.c_grid;
  const std::vector<double> mu = mean_vector(config);
  std::size_t wins1 = 0, wins2 = 0, reduced = 0, total = 0;

  for (std::size_t t = 0; t < config.trials; ++t) {
    Population pop = sample_population(config, trial_seed(config.seed, t));
    RowMatrix sq = squared_distances(pop);
    PassResult g = pass(pop, sq, out.delta, log_density_weights(pop, std::nullopt, mu));
    const double sigma_emp = mean_dimension_std(pop.features, pop.normals + pop.anomalies, pop.dim);

    std::optional<PassResult> best;
    double best_c = 0.0;
    std::size_t best_wins = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (double c : grid) {
      PassResult h = pass(pop, sq, out.delta, log_density_weights(pop, c, mu));
      std::size_t w = 0;
      double mean = 0.0;
      for (std::size_t k = 0; k < pop.anomalies; ++k) {
        w += h.post_ratios[k] > g.post_ratios[k] ? 1 : 0;
        mean += h.post_ratios[k] / static_cast<double>(pop.anomalies);
      }
      if (!best || w > best_wins || (w == best_wins && mean > best_mean)) {
        best = std::move(h);
        best_c = c;
        best_wins = w;
        best_mean = mean;
      }
    }

    out.sigma_empirical.push_back(sigma_emp);
    out.sigma_star.push_back(g.sigma_star);
    out.sigma_star_hat.push_back(best->sigma_star);
    if (g.degenerate) ++out.degenerate_trials;
    if (g.sigma_star < sigma_emp) ++reduced;
    for (std::size_t k = 0; k < pop.anomalies; ++k) {
      AnomalyRow row;
      row.trial = t;
      row.K = config.K;
      row.delta = out.delta;
      row.c = best_c;
      row.pre_ratio = distance(pop.features, pop.anomaly(k), pop.reference(k), pop.dim) / config.sigma;
      row.post_ratio_g = g.post_ratios[k];
      row.post_ratio_ghat = best->post_ratios[k];
      wins1 += row.post_ratio_g > row.pre_ratio ? 1 : 0;
      wins2 += row.post_ratio_ghat > row.post_ratio_g ? 1 : 0;
      ++total;
      out.rows.push_back(row);
    }
  }
  out.theorem1_rate = total ? static_cast<double>(wins1) / static_cast<double>(total) : 0.0;
  out.theorem2_rate = total ? static_cast<double>(wins2) / static_cast<double>(total) : 0.0;
  out.variance_reduction_rate = static_cast<double>(reduced) / static_cast<double>(config.trials);
  return out;
}

void write_outcome(std::ostream& out, const TheoremConfig& config, const TheoremOutcome& outcome) {
  out << "normals=" << config.normals << '\n'
      << "anomalies=" << config.anomalies << '\n'
      << "dim=" << config.dim << '\n'
      << "sigma=" << fmt(config.sigma) << '\n'
      << "K=" << fmt(config.K) << '\n'
      << "delta=" << fmt(outcome.delta) << '\n'
      << "trials=" << config.trials << '\n'
      << "seed=" << config.seed << '\n'
      << "theorem1_rate=" << fmt(outcome.theorem1_rate) << '\n'
      << "theorem2_rate=" << fmt(outcome.theorem2_rate) << '\n'
      << "variance_reduction_rate=" << fmt(outcome.variance_reduction_rate) << '\n'
      << "degenerate_trials=" << outcome.degenerate_trials << '\n';
}

void write_trials_csv(std::ostream& out, const TheoremOutcome& outcome) {
  out << "trial,K,delta,c,pre_ratio,post_ratio_g,post_ratio_ghat\n";
  for (const AnomalyRow& r : outcome.rows) {
    out << r.trial << ',' << fmt(r.K) << ',' << fmt(r.delta) << ',' << fmt(r.c) << ',' << fmt(r.pre_ratio) << ','
        << fmt(r.post_ratio_g) << ',' << fmt(r.post_ratio_ghat) << '\n';
  }
}

}  // namespace subdetector::theory
