#pragma once

#include <iosfwd>

#include "subdetector/cli/run_config.hpp"

namespace subdetector::cli {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

// Each command writes its artifacts under config.output and a short summary to `log`.
void cmd_detect(const RunConfig& config, std::ostream& log);
void cmd_discord(const RunConfig& config, std::ostream& log);
void cmd_theorem(const RunConfig& config, std::ostream& log);
void cmd_bench(const RunConfig& config, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& log);
void cmd_synth(const RunConfig& config, std::ostream& log);

// Dispatches on config.command and maps errors to exit codes with a one-line
// diagnostic on `err`.
int run_command(const RunConfig& config, std::ostream& log, std::ostream& err);

// Full command-line entry point: flags, optional --config file, SUBDETECTOR_SEED fallback.
int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

// Coefficient of determination of the least-squares line through (x, y);
// empty with fewer than two distinct x values.
std::optional<double> linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace subdetector::cli
