#include "subdetector/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "subdetector/errors.hpp"

namespace subdetector::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("option --" + key + ": cannot parse '" + value + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw ConfigError("option --" + key + ": value must be finite");
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return parse_number<std::size_t>(key, value);
}

double parse_double(const std::string& key, const std::string& value) { return parse_number<double>(key, value); }

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on" || v.empty()) return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("option --" + key + ": expected a boolean, got '" + value + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(value)) out.push_back(parse_size(key, item));
  if (out.empty()) throw ConfigError("option --" + key + ": empty list");
  return out;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : split_list(value)) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("option --" + key + ": empty list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

OptionSpec value(std::string name, std::string help, Setter apply) {
  return {std::move(name), std::move(help), false, std::move(apply)};
}
OptionSpec flag(std::string name, std::string help, Setter apply) {
  return {std::move(name), std::move(help), true, std::move(apply)};
}

std::vector<OptionSpec> build_specs() {
  using K = const std::string&;
  std::vector<OptionSpec> s;
  // Input and output.
  s.push_back(value("input", "series file; repeatable or comma separated", [](RunConfig& c, K v) {
    for (const std::string& p : split_list(v)) c.inputs.emplace_back(p);
  }));
  s.push_back(value("format", "plain (one value per line) or csv (value,label)", [](RunConfig& c, K v) {
    if (v == "plain") c.format = SeriesFormat::PlainValues;
    else if (v == "csv") c.format = SeriesFormat::LabeledCsv;
    else throw ConfigError("option --format: expected plain or csv, got '" + v + "'");
  }));
  s.push_back(value("output", "output directory", [](RunConfig& c, K v) { c.output = v; }));
  s.push_back(value("seed", "master seed", [](RunConfig& c, K v) { c.seed = parse_number<std::uint64_t>("seed", v); }));
  s.push_back(flag("plot", "write an SVG score plot", [](RunConfig& c, K v) { c.plot = parse_bool("plot", v); }));
  s.push_back(flag("no-plot", "skip the SVG score plot", [](RunConfig& c, K v) { c.plot = !parse_bool("no-plot", v); }));
  s.push_back(value("top-k", "windows shaded in the plot", [](RunConfig& c, K v) { c.top_k = parse_size("top-k", v); }));
  // Windows and graph.
  s.push_back(value("period", "period length; estimated when absent", [](RunConfig& c, K v) { c.period = parse_size("period", v); }));
  s.push_back(value("delta", "shortest scale length", [](RunConfig& c, K v) { c.delta = parse_size("delta", v); }));
  s.push_back(value("stride", "window stride", [](RunConfig& c, K v) { c.stride = parse_size("stride", v); }));
  s.push_back(value("max-scale", "largest scale exponent P", [](RunConfig& c, K v) { c.max_scale = parse_size("max-scale", v); }));
  s.push_back(value("k", "prior graph neighbours per measure", [](RunConfig& c, K v) { c.detector.K = parse_size("k", v); }));
  // Encoder.
  s.push_back(value("hidden", "encoder width d", [](RunConfig& c, K v) { c.detector.model.tcn.hidden = parse_size("hidden", v); }));
  s.push_back(value("kernel-size", "convolution kernel size",
                    [](RunConfig& c, K v) { c.detector.model.tcn.kernel_size = parse_size("kernel-size", v); }));
  s.push_back(value("dilations", "comma-separated dilations, one per layer", [](RunConfig& c, K v) {
    c.detector.model.tcn.dilations = parse_sizes("dilations", v);
    c.detector.model.tcn.layers = c.detector.model.tcn.dilations.size();
  }));
  s.push_back(value("length-prior", "start the length embeddings one-hot on this scale",
                    [](RunConfig& c, K v) { c.detector.model.length_prior = parse_size("length-prior", v); }));
  // Adjacency.
  s.push_back(value("delta1", "latent distance bandwidth", [](RunConfig& c, K v) { c.detector.model.dagnn.delta1 = parse_double("delta1", v); }));
  s.push_back(value("delta2", "data-space distance bandwidth", [](RunConfig& c, K v) { c.detector.model.dagnn.delta2 = parse_double("delta2", v); }));
  s.push_back(value("delta3", "temporal distance bandwidth; the period by default",
                    [](RunConfig& c, K v) { c.detector.model.dagnn.delta3 = parse_double("delta3", v); }));
  s.push_back(value("delta4", "density bandwidth", [](RunConfig& c, K v) { c.detector.model.dagnn.delta4 = parse_double("delta4", v); }));
  s.push_back(value("density-mode", "source or target", [](RunConfig& c, K v) {
    if (v == "source") c.detector.model.dagnn.density_mode = DensityMode::Source;
    else if (v == "target") c.detector.model.dagnn.density_mode = DensityMode::Target;
    else throw ConfigError("option --density-mode: expected source or target, got '" + v + "'");
  }));
  s.push_back(value("gnn-layers", "message passing layers",
                    [](RunConfig& c, K v) { c.detector.model.dagnn.layers = parse_size("gnn-layers", v); }));
  // Ablations.
  s.push_back(flag("no-graph", "score on encoder output, no message passing",
                   [](RunConfig& c, K v) { c.detector.model.ablation.no_graph = parse_bool("no-graph", v); }));
  s.push_back(flag("no-adaptive", "uniform weights on the prior graph",
                   [](RunConfig& c, K v) { c.detector.model.ablation.no_adaptive = parse_bool("no-adaptive", v); }));
  s.push_back(flag("no-density", "skip the density refinement",
                   [](RunConfig& c, K v) { c.detector.model.ablation.no_density = parse_bool("no-density", v); }));
  s.push_back(flag("no-length-selection", "average the scale representations", [](RunConfig& c, K v) {
    c.detector.model.ablation.no_length_selection = parse_bool("no-length-selection", v);
  }));
  s.push_back(value("fixed-length", "use only the scale nearest this length",
                    [](RunConfig& c, K v) { c.detector.model.ablation.fixed_length = parse_size("fixed-length", v); }));
  // Training.
  s.push_back(value("epochs", "training epochs", [](RunConfig& c, K v) { c.detector.train.epochs = parse_size("epochs", v); }));
  s.push_back(value("steps-per-epoch", "optimizer steps per phase and epoch",
                    [](RunConfig& c, K v) { c.detector.train.steps_per_epoch = parse_size("steps-per-epoch", v); }));
  s.push_back(value("lr-theta", "learning rate of the model weights",
                    [](RunConfig& c, K v) { c.detector.train.lr_theta = parse_double("lr-theta", v); }));
  s.push_back(value("lr-lengths", "learning rate of the length embeddings",
                    [](RunConfig& c, K v) { c.detector.train.lr_lengths = parse_double("lr-lengths", v); }));
  s.push_back(value("lambda", "reconstruction weight", [](RunConfig& c, K v) { c.detector.train.loss.lambda = parse_double("lambda", v); }));
  s.push_back(value("mu", "length embedding smoothness weight", [](RunConfig& c, K v) { c.detector.train.loss.mu = parse_double("mu", v); }));
  s.push_back(value("w-norm", "HSC weight of known-normal windows",
                    [](RunConfig& c, K v) { c.detector.train.loss.w_norm = parse_double("w-norm", v); }));
  s.push_back(value("w-unlabeled", "HSC weight of unlabeled windows",
                    [](RunConfig& c, K v) { c.detector.train.loss.w_unlabeled = parse_double("w-unlabeled", v); }));
  s.push_back(value("injection-rate", "injected copies per window",
                    [](RunConfig& c, K v) { c.detector.train.injection.rate = parse_double("injection-rate", v); }));
  s.push_back(value("injection-types", "comma-separated injection types", [](RunConfig& c, K v) {
    c.detector.train.injection.types.clear();
    for (const std::string& t : split_list(v)) {
      try {
        c.detector.train.injection.types.push_back(parse_injection_type(t));
      } catch (const Error& e) {
        throw ConfigError(std::string("option --injection-types: ") + e.what());
      }
    }
  }));
  s.push_back(value("checkpoint", "load parameters instead of training", [](RunConfig& c, K v) { c.checkpoint = v; }));
  s.push_back(value("save-checkpoint", "write parameters after training", [](RunConfig& c, K v) { c.save_checkpoint = v; }));
  // Discord baseline.
  s.push_back(value("discord-k", "neighbour rank of the discord score", [](RunConfig& c, K v) { c.discord_k = parse_size("discord-k", v); }));
  // Theorem simulator.
  s.push_back(value("trials", "Monte-Carlo trials", [](RunConfig& c, K v) { c.theorem.trials = parse_size("trials", v); }));
  s.push_back(value("theorem-normals", "normal samples N", [](RunConfig& c, K v) { c.theorem.normals = parse_size("theorem-normals", v); }));
  s.push_back(value("theorem-anomalies", "anomalies M", [](RunConfig& c, K v) { c.theorem.anomalies = parse_size("theorem-anomalies", v); }));
  s.push_back(value("theorem-dim", "feature dimension", [](RunConfig& c, K v) { c.theorem.dim = parse_size("theorem-dim", v); }));
  s.push_back(value("theorem-sigma", "normal std", [](RunConfig& c, K v) { c.theorem.sigma = parse_double("theorem-sigma", v); }));
  s.push_back(value("theorem-mu-norm", "norm of the mean vector", [](RunConfig& c, K v) { c.theorem_mu_norm = parse_double("theorem-mu-norm", v); }));
  s.push_back(value("theorem-k", "anomaly deviation in units of sigma", [](RunConfig& c, K v) { c.theorem.K = parse_double("theorem-k", v); }));
  s.push_back(value("theorem-delta", "kernel bandwidth; a fraction of the bound by default",
                    [](RunConfig& c, K v) { c.theorem.delta = parse_double("theorem-delta", v); }));
  s.push_back(value("theorem-delta-factor", "kernel bandwidth as a multiple of the bound",
                    [](RunConfig& c, K v) { c.theorem.delta_factor = parse_double("theorem-delta-factor", v); }));
  s.push_back(value("theorem-c-grid", "comma-separated density bandwidths",
                    [](RunConfig& c, K v) { c.theorem.c_grid = parse_doubles("theorem-c-grid", v); }));
  // Benchmark and synthetic data.
  s.push_back(value("bench-lengths", "comma-separated series lengths",
                    [](RunConfig& c, K v) { c.bench_lengths = parse_sizes("bench-lengths", v); }));
  s.push_back(value("synthetic-length", "synthetic series length", [](RunConfig& c, K v) { c.synthetic.length = parse_size("synthetic-length", v); }));
  s.push_back(value("synthetic-period", "synthetic period", [](RunConfig& c, K v) { c.synthetic.period = parse_size("synthetic-period", v); }));
  s.push_back(value("synthetic-anomalies", "synthetic anomaly count",
                    [](RunConfig& c, K v) { c.synthetic.anomalies = parse_size("synthetic-anomalies", v); }));
  s.push_back(value("synthetic-noise", "synthetic noise std", [](RunConfig& c, K v) { c.synthetic.noise = parse_double("synthetic-noise", v); }));
  s.push_back(value("synthetic-min-length", "shortest synthetic anomaly",
                    [](RunConfig& c, K v) { c.synthetic.min_length = parse_size("synthetic-min-length", v); }));
  s.push_back(value("synthetic-max-length", "longest synthetic anomaly",
                    [](RunConfig& c, K v) { c.synthetic.max_length = parse_size("synthetic-max-length", v); }));
  s.push_back(value("synthetic-types", "comma-separated: spike, warp, flip", [](RunConfig& c, K v) {
    c.synthetic.types.clear();
    for (const std::string& t : split_list(v)) c.synthetic.types.push_back(parse_synthetic_anomaly(t));
  }));
  return s;
}

}  // namespace

const std::vector<OptionSpec>& option_specs() {
  static const std::vector<OptionSpec> specs = build_specs();
  return specs;
}

void apply_option(RunConfig& config, const std::string& key, const std::string& value) {
  for (const OptionSpec& spec : option_specs()) {
    if (spec.name == key) {
      spec.apply(config, value);
      return;
    }
  }
  throw ConfigError("unknown option '" + key + "'");
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    // Repeated inputs accumulate; any other repeated key keeps its last value.
    if (key == "input" && out.count(key)) out[key] += "," + trim(line.substr(eq + 1));
    else out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

void RunConfig::finalize() {
  const std::uint64_t s = effective_seed();
  detector.train.seed = s;
  detector.train.injection.seed = s;
  theorem.seed = s;
  synthetic.seed = s;
  if (theorem_mu_norm) {
    if (*theorem_mu_norm < 0) throw ConfigError("option --theorem-mu-norm must be non-negative");
    theorem.mu.assign(theorem.dim, *theorem_mu_norm / std::sqrt(static_cast<double>(theorem.dim)));
  }
  detector.model.ablation.normalize();
  if (top_k == 0) throw ConfigError("option --top-k must be positive");
  if (discord_k == 0) throw ConfigError("option --discord-k must be positive");
  if (detector.K == 0) throw ConfigError("option --k must be positive");
  if (delta && *delta == 0) throw ConfigError("option --delta must be positive");
  if (stride && *stride == 0) throw ConfigError("option --stride must be positive");
  detector.model.tcn.validate();
  detector.train.validate();
}

}  // namespace subdetector::cli
