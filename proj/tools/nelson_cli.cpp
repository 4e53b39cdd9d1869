#include <iostream>

#include <CLI11.hpp>

#include "nelson/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nelson model mean-field and fluctuation dynamics"};
  app.require_subcommand(1);

  nelson::RunOptions opt;
  std::uint64_t seed = 0;
  CLI::App* run = app.add_subcommand("run", "Run the scenario described by a config file");
  run->add_option("config", opt.config_path, "Scenario config (INI)")->required();
  run->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  run->add_option("--threads", opt.threads, "Worker threads for the N sweep")->capture_default_str();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "Overrides run.seed");
  run->add_flag("--doubled-caps", opt.doubled_caps, "Repeat the sweep with doubled truncation caps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nelson::exit_config;
  }
  if (*seed_opt) opt.seed = seed;
  return nelson::run_scenario(opt, std::cerr);
}
