#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tubalreg/error.hpp"
#include "tubalreg_cli/config.hpp"

namespace tubalreg::cli {

/// Command-line overrides shared by all subcommands.
struct Overrides {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<fs::path> out;
};

enum ExitCode : int { kOk = 0, kConfigError = 1, kIoError = 2, kNumericalFailure = 3 };

ExitCode exit_code_for(Errc code) noexcept;

/// Each command returns normally on success and throws tubalreg::Error
/// otherwise.
void cmd_simulate(const ExperimentConfig& cfg);
void cmd_fit(const ExperimentConfig& cfg);
void cmd_cv(const ExperimentConfig& cfg);
void cmd_bench(const ExperimentConfig& cfg);
/// Writes <out>/trace.dat and <out>/trace.gp; returns the number of points.
std::size_t cmd_trace_plot(const fs::path& trace_csv, const fs::path& out);

/// Loads the config (or an empty one) and applies the overrides.
ExperimentConfig prepare_config(const Overrides& ov);

/// Full CLI entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace tubalreg::cli
