// Command-line front end: configuration-driven experiment runner.
//
// cidet analyze|simulate|sweep-b0|compare-md|payoff --config <path> --out <dir>
//       [--seed <u64>] [--trials <int>] [--iters <int>]
//
// Exit codes: 0 success, 1 usage/configuration error, 2 assumption-validation
// failure, 3 numerical failure. CIDET_THREADS caps the worker count.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "cidet/experiment.hpp"
#include "cidet/version.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  long trials = -1;
  long iters = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment configuration (JSON)")
      ->required();
  cmd->add_option("--out", o.out_dir, "output directory")->required();
  cmd->add_option("--seed", o.seed, "override the master seed")
      ->each([&](const std::string&) { o.seed_set = true; });
  cmd->add_option("--trials", o.trials, "override the trial count");
  cmd->add_option("--iters", o.iters, "override the iteration count");
}

cidet::ExperimentConfig load(const CommonOpts& o) {
  cidet::ExperimentConfig cfg = cidet::load_config(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.trials >= 0) cfg.trials = o.trials;
  if (o.iters >= 0) {
    cfg.iters = o.iters;
    // stale checkpoints from the file may now be out of range
    std::erase_if(cfg.checkpoints, [&](long k) { return k > cfg.iters; });
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consensus+innovations distributed detection over noisy networks"};
  app.set_version_flag("--version", std::string(cidet::kVersion));
  app.require_subcommand(1);

  CommonOpts analyze_opts, simulate_opts, sweep_opts, compare_opts, payoff_opts;
  cidet::SweepGrid grid;

  CLI::App* analyze = app.add_subcommand("analyze", "bound report and exact-moment rates");
  add_common(analyze, analyze_opts);
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo error rates and moments");
  add_common(simulate, simulate_opts);
  CLI::App* sweep = app.add_subcommand("sweep-b0", "bound and exact rate per b0 grid point");
  add_common(sweep, sweep_opts);
  sweep->add_option("--b0-min", grid.b0_min, "grid lower end (default b0*/20)");
  sweep->add_option("--b0-max", grid.b0_max, "grid upper end (default 20*b0*)");
  sweep->add_option("--points", grid.points, "grid size (default 200)");
  CLI::App* compare = app.add_subcommand("compare-md", "head-to-head against the mixed-time-scale detector");
  add_common(compare, compare_opts);
  CLI::App* payoff = app.add_subcommand("payoff", "communication payoff verdict");
  add_common(payoff, payoff_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) {
      return cidet::cmd_analyze(load(analyze_opts), analyze_opts.out_dir, std::cout);
    }
    if (simulate->parsed()) {
      return cidet::cmd_simulate(load(simulate_opts), simulate_opts.out_dir, std::cout);
    }
    if (sweep->parsed()) {
      return cidet::cmd_sweep_b0(load(sweep_opts), sweep_opts.out_dir, grid, std::cout);
    }
    if (compare->parsed()) {
      return cidet::cmd_compare_md(load(compare_opts), compare_opts.out_dir, std::cout);
    }
    if (payoff->parsed()) {
      return cidet::cmd_payoff(load(payoff_opts), payoff_opts.out_dir, std::cout);
    }
  } catch (const cidet::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const cidet::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
