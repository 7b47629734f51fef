#pragma once

// Command orchestration behind the command-line tool. Each command validates
// its configuration before touching the output directory, writes its CSV /
// JSON artifacts there and finishes with manifest.json.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wavestab {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,
  exit_geometry = 2,
  exit_precondition = 3,
  exit_selftest = 4,
};

struct CommandOptions {
  std::string command;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> out_dir;
  int threads = 1;  ///< 0 = hardware concurrency
  std::vector<double> taus;
};

/// The command names in the order they are documented.
const std::vector<std::string>& command_names();

/// Output directory: explicit flag, then the config, then the WAVESTAB_OUT
/// environment variable, then "out".
std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& flag,
                                         const std::optional<std::string>& from_config);

/// Runs one command and maps failures to exit codes; messages go to `err`,
/// per-command console output to `out`.
int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace wavestab
