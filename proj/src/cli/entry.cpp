#include <CLI11.hpp>
#include <cstdlib>
#include <ostream>

#include "subdetector/cli/commands.hpp"
#include "subdetector/errors.hpp"

namespace subdetector::cli {

int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Subsequence anomaly detection with density-aware graph message passing"};
  app.set_help_all_flag("--help-all");
  std::string command;
  app.add_option("command", command, "detect | discord | theorem | bench | eval | synth")
      ->required()
      ->check(CLI::IsMember({"detect", "discord", "theorem", "bench", "eval", "synth"}));
  std::string config_file;
  app.add_option("--config", config_file, "key = value file; flags take precedence");

  const auto& specs = option_specs();
  std::vector<std::vector<std::string>> values(specs.size());
  std::vector<CLI::Option*> opts(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string name = "--" + specs[i].name;
    opts[i] = specs[i].flag ? app.add_flag(name, specs[i].help) : app.add_option(name, values[i], specs[i].help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig config;
  config.command = command;
  try {
    if (!config_file.empty()) {
      for (const auto& [key, value] : read_config_file(config_file)) apply_option(config, key, value);
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (opts[i]->count() == 0) continue;
      if (specs[i].flag) {
        specs[i].apply(config, "true");
      } else {
        for (const std::string& v : values[i]) specs[i].apply(config, v);
      }
    }
    if (!config.seed) {
      if (const char* env = std::getenv("SUBDETECTOR_SEED"); env && *env) apply_option(config, "seed", env);
    }
    config.finalize();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return run_command(config, log, err);
}

}  // namespace subdetector::cli
