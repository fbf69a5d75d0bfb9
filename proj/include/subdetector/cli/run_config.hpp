#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subdetector/cli/synthetic.hpp"
#include "subdetector/theorysim/theorysim.hpp"
#include "subdetector/trainer/trainer.hpp"

namespace subdetector::cli {

struct RunConfig {
  std::string command;
  std::vector<std::filesystem::path> inputs;
  std::optional<SeriesFormat> format;  // by extension when unset: .csv is labeled csv
  std::filesystem::path output = ".";

  std::optional<std::size_t> period;  // estimated from the series when unset
  std::optional<std::size_t> delta;   // window geometry; derived from the period when unset
  std::optional<std::size_t> stride;
  std::size_t max_scale = 5;

  DetectorConfig detector;
  std::optional<std::filesystem::path> checkpoint;       // load instead of training
  std::optional<std::filesystem::path> save_checkpoint;  // after training
  bool plot = true;
  std::size_t top_k = 3;

  std::size_t discord_k = 1;

  theory::TheoremConfig theorem;
  std::optional<double> theorem_mu_norm;  // mean vector with every entry mu_norm / sqrt(d)

  std::vector<std::size_t> bench_lengths{10000, 20000, 40000, 80000};
  SyntheticConfig synthetic;

  std::optional<std::uint64_t> seed;

  // Pushes the seed and derived settings into the module configs and checks consistency.
  void finalize();
  std::uint64_t effective_seed() const { return seed.value_or(0); }
};

struct OptionSpec {
  std::string name;  // kebab-case, also the config-file key
  std::string help;
  bool flag = false;  // boolean switch taking no value on the command line
  std::function<void(RunConfig&, const std::string&)> apply;
};

// Every RunConfig field that can be set from a flag or a config file.
const std::vector<OptionSpec>& option_specs();

// Applies one key=value pair. Throws ConfigError on unknown keys or bad values.
void apply_option(RunConfig& config, const std::string& key, const std::string& value);

// Parses "key = value" lines; '#' starts a comment. Throws ConfigError naming the line.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

}  // namespace subdetector::cli
