#include <CLI11.hpp>
#include <iostream>

#include "bmlab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"desk-scale laboratory for product-set measure inequalities on Lie groups"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  std::string config_path, group, experiment, levels, out, samples, seed, threads;
  std::vector<std::string> defines;
  bool strict = false;
  run_cmd->add_option("--config", config_path, "key = value config file");
  run_cmd->add_option("--group", group, "group name, e.g. sl2r, aff, r:2, prod(r:1,heis3)");
  run_cmd->add_option("--experiment", experiment, "experiment kind (see `list`)");
  run_cmd->add_option("--levels", levels, "comma separated increasing level schedule");
  run_cmd->add_option("--samples", samples, "Monte Carlo samples for inner estimates");
  run_cmd->add_option("--seed", seed, "rng seed (mandatory for stochastic experiments)");
  run_cmd->add_option("--threads", threads, "thread cap for samplers");
  run_cmd->add_option("--out", out, "output path prefix (.csv and .json)");
  run_cmd->add_flag("--strict", strict, "treat domain clipping warnings as failures");
  run_cmd->add_option("-D,--define", defines, "extra key=value experiment parameter");

  auto* list_cmd = app.add_subcommand("list", "list experiment kinds");
  auto* describe_cmd = app.add_subcommand("describe", "describe one experiment kind");
  std::string kind;
  describe_cmd->add_option("kind", kind, "experiment kind")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) {
      for (const auto& k : bmlab::list_experiments()) std::cout << k << "\n";
      return 0;
    }
    if (describe_cmd->parsed()) {
      std::cout << bmlab::describe(kind) << "\n";
      return 0;
    }
    bmlab::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = bmlab::ExperimentConfig::from_file(config_path);
    if (!group.empty()) cfg.set("group", group);
    if (!experiment.empty()) cfg.set("experiment", experiment);
    if (!levels.empty()) cfg.set("levels", levels);
    if (!samples.empty()) cfg.set("samples", samples);
    if (!seed.empty()) cfg.set("seed", seed);
    if (!threads.empty()) cfg.set("threads", threads);
    if (!out.empty()) cfg.set("out", out);
    if (strict) cfg.set("strict", "1");
    for (const auto& d : defines) {
      size_t eq = d.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--define expects key=value, got: " + d);
      cfg.set(d.substr(0, eq), d.substr(eq + 1));
    }
    bmlab::RunResult res = bmlab::run(cfg);
    std::cout << res.csv_body;
    std::cerr << "wrote " << res.csv_path << " and " << res.json_path << "\n";
    return res.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
