#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cidet/common.hpp"
#include "cidet/graph.hpp"
#include "cidet/model.hpp"
#include "cidet/moments.hpp"
#include "cidet/montecarlo.hpp"
#include "cidet/schedule.hpp"

namespace cidet {

// Parsed experiment configuration. Schedule parameters may be left for
// resolution against the graph spectrum: b0 < 0 means "optimal", a < 0
// means the default offset b0 * lambda_n.
struct ExperimentConfig {
  GraphSpec graph;
  SensingModel sensing;
  CommModel comm;
  std::string schedule_kind = "alpha";  // alpha | beta | constant
  double schedule_a = -1.0;
  double schedule_b0 = -1.0;
  double schedule_tau = 1.0;
  double schedule_alpha = 0.0;
  std::string dynamics = "ci";  // ci | md | centralized | isolated
  int sensor = 0;
  MdParams md;
  NoiseFamily sensing_family = NoiseFamily::gaussian;
  NoiseFamily comm_family = NoiseFamily::gaussian;
  long iters = 1000;
  long trials = 0;  // 0: analytic only
  std::vector<long> checkpoints;  // default: decades up to iters
  std::uint64_t seed = 0;
};

// Thrown by resolve_experiment when a required modeling assumption fails;
// commands translate it into exit code 2.
class AssumptionFailure : public std::runtime_error {
 public:
  explicit AssumptionFailure(Checklist cl)
      : std::runtime_error(cl.failure_summary()), checklist(std::move(cl)) {}
  Checklist checklist;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON of a config (sorted keys, defaults materialized); the
// manifest hash is FNV-1a 64 over this string.
std::string config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// Fully resolved bundle: graph built, spectrum computed, statistics
// derived, schedule parameters materialized, assumptions evaluated.
struct Experiment {
  ExperimentConfig config;
  NetworkGraph graph;
  LaplacianSpectrum spectrum;
  DerivedStats stats;
  WeightSchedule schedule;
  Checklist assumptions;  // model assumptions plus step-size admissibility
  bool equal_snr = false;
  std::vector<long> checkpoints;
};

Experiment resolve_experiment(const ExperimentConfig& cfg);

struct SweepGrid {
  double b0_min = 0.0;  // <= 0: default b0*/20
  double b0_max = 0.0;  // <= 0: default 20*b0*
  int points = 200;
};

// Commands return the process exit code: 0 success, 2 assumption-validation
// failure, 3 numerical failure. Configuration errors throw ConfigError and
// map to exit code 1 in the CLI. Every command writes a run manifest into
// the output directory.
int cmd_analyze(const ExperimentConfig& cfg, const std::string& out_dir,
                std::ostream& diag);
int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir,
                 std::ostream& diag);
int cmd_sweep_b0(const ExperimentConfig& cfg, const std::string& out_dir,
                 const SweepGrid& grid, std::ostream& diag);
int cmd_compare_md(const ExperimentConfig& cfg, const std::string& out_dir,
                   std::ostream& diag);
int cmd_payoff(const ExperimentConfig& cfg, const std::string& out_dir,
               std::ostream& diag);

}  // namespace cidet
