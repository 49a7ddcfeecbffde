#include <iostream>

#include <CLI11.hpp>

#include "rlf/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stability experiments for flows of rough vector fields"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  bool svg = false;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "YAML configuration file")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    cmd->add_flag("--svg", svg, "also write SVG plots");
    cmd->add_option("--seed", seed, "seed for every random choice (overrides the config)");
  };
  auto* run = app.add_subcommand("run", "verify the main estimate for one perturbation");
  auto* sweep = app.add_subcommand("sweep", "repeat the run over a list of epsilons");
  auto* lemmas = app.add_subcommand("check-lemmas", "empirical constants of the two maximal-function lemmas");
  for (auto* cmd : {run, sweep, lemmas}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  rlf::CliOverrides overrides;
  if (!out_dir.empty()) overrides.out_dir = out_dir;
  overrides.svg = svg;
  for (auto* cmd : {run, sweep, lemmas}) {
    if (cmd->count_all() > 0 && cmd->get_option("--seed")->count() > 0) overrides.seed = seed;
  }

  if (run->parsed()) return rlf::cmd_run(config, overrides, std::cout, std::cerr);
  if (sweep->parsed()) return rlf::cmd_sweep(config, overrides, std::cout, std::cerr);
  return rlf::cmd_check_lemmas(config, overrides, std::cout, std::cerr);
}
