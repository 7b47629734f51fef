// Command-line front end: `wavestab <command> --config <file> [--out <dir>]`
// or `wavestab --selftest`.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavestab/acceptance.hpp"
#include "wavestab/commands.hpp"

int main(int argc, char** argv) {
  using namespace wavestab;
  CLI::App app{"Wave-equation coefficient stability laboratory"};
  std::string command;
  std::string config;
  std::string out;
  int threads = 1;
  std::vector<double> taus;
  bool selftest = false;
  std::vector<int> only;

  std::string names;
  for (const auto& n : command_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "One of: " + names);
  app.add_option("--config", config, "JSON configuration file");
  app.add_option("--out", out, "Output directory (overrides the config and WAVESTAB_OUT)");
  app.add_option("--threads", threads, "Worker threads, 0 = all hardware threads")->check(CLI::NonNegativeNumber);
  app.add_option("--tau", taus, "Weight parameters for the identity command")->delimiter(',');
  app.add_flag("--selftest", selftest, "Run the acceptance suite; exit 4 on any failure");
  app.add_option("--only", only, "Restrict --selftest to these criterion ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  if (selftest) {
    AcceptanceOptions options;
    options.threads = threads;
    options.only.insert(only.begin(), only.end());
    const auto results = run_acceptance(options, std::cout);
    for (const auto& r : results) {
      if (!r.passed) return exit_selftest;
    }
    return exit_ok;
  }
  if (command.empty()) {
    std::cerr << "error: a command is required (" << names << ")\n";
    return exit_config;
  }
  CommandOptions options;
  options.command = command;
  if (!config.empty()) options.config_path = config;
  if (!out.empty()) options.out_dir = out;
  options.threads = threads;
  options.taus = taus;
  return run_command(options, std::cout, std::cerr);
}
