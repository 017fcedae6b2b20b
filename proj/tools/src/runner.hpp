#pragma once

#include "config.hpp"

#include <filesystem>
#include <iosfwd>

namespace edp::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_numerical = 2, exit_io = 3 };

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "EDP_OUT_DIR";

/// config.output_dir, else $EDP_OUT_DIR, else "edp_out".
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// Validates the configuration, runs its command and writes manifest.json
/// plus the command's CSV files. Nothing is written when validation fails.
/// Diagnostics go to `log`; the return value is an ExitCode.
int run(const ExperimentConfig& config, std::ostream& log);

}  // namespace edp::cli
