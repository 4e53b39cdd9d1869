#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace nelson {

// Exit codes of a scenario run.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_invariant = 3, exit_capacity = 4 };

struct RunOptions {
  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  std::optional<std::uint64_t> seed;
  bool doubled_caps = false;
};

// Runs the scenario named in the config and writes report.json,
// trajectory.csv, densities.csv and basis.json into out_dir. Diagnostics and
// timings go to `log`.
int run_scenario(const RunOptions& options, std::ostream& log);

}  // namespace nelson
