#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cidet/csv.hpp"
#include "cidet/experiment.hpp"
#include "cidet/perf.hpp"

using namespace cidet;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kStandardConfig = R"({
  "graph": {"kind": "path", "n": 2},
  "model": {
    "m0": [-1.0, -1.0], "m1": [1.0, 1.0],
    "s_zeta": {"scaled_identity": 1.0},
    "s_v": {"scaled_identity": 0.25}
  },
  "schedule": {"kind": "alpha", "b0": "optimal"},
  "iters": 2000,
  "trials": 0,
  "checkpoints": [10, 100, 2000],
  "seed": 7
})";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cidet_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing and schedule resolution") {
  const ExperimentConfig cfg = parse_config(kStandardConfig);
  const Experiment ex = resolve_experiment(cfg);
  // optimal b0 for g_c=16, lambda2=2 with the default offset a = b0*lambda_n
  CHECK(ex.schedule.b0 == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
  CHECK(ex.schedule.a == doctest::Approx(2.0 * std::cbrt(2.0)).epsilon(1e-12));
  CHECK(ex.equal_snr);
  CHECK(ex.assumptions.all_pass());
}

TEST_CASE("config hash is stable and tamper-evident") {
  const ExperimentConfig cfg = parse_config(kStandardConfig);
  CHECK(config_hash(cfg) == config_hash(cfg));
  ExperimentConfig other = cfg;
  other.seed += 1;
  CHECK(config_hash(cfg) != config_hash(other));
}

TEST_CASE("analyze writes a deterministic bound report") {
  const ExperimentConfig cfg = parse_config(kStandardConfig);
  const fs::path dir1 = fresh_dir("analyze1");
  const fs::path dir2 = fresh_dir("analyze2");
  std::ostringstream diag;
  REQUIRE(cmd_analyze(cfg, dir1.string(), diag) == 0);
  REQUIRE(cmd_analyze(cfg, dir2.string(), diag) == 0);

  const std::string report = slurp((dir1 / "bound_report.json").string());
  CHECK(report == slurp((dir2 / "bound_report.json").string()));

  const json j = json::parse(report);
  CHECK(j["chernoff_total"].get<double>() == doctest::Approx(1.0));
  CHECK(j["rate_bound_equal_tight"].get<double>() > 0.0);
  CHECK(j["optimal_b0"].get<double>() == doctest::Approx(std::cbrt(2.0)));

  // manifest hash re-derives from the stored config
  const json manifest = json::parse(slurp((dir1 / "manifest.json").string()));
  const ExperimentConfig stored = parse_config(manifest["config"].dump());
  CHECK(config_hash(stored) == manifest["config_hash"].get<std::string>());
  CHECK(manifest["artifacts"].size() >= 3);
}

TEST_CASE("analyze with closed-form dynamics") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.dynamics = "centralized";
  const fs::path dir = fresh_dir("analyze_cen");
  std::ostringstream diag;
  REQUIRE(cmd_analyze(cfg, dir.string(), diag) == 0);
  std::istringstream in(slurp((dir / "rates.csv").string()));
  const RateTrajectory rates = read_rate_csv(in);
  // the fused statistic's rate approaches the total exponent C = 1
  CHECK(std::abs(rates.worst_at(2000) - 1.0) <= 0.01);

  cfg.dynamics = "isolated";
  cfg.sensor = 1;
  const fs::path dir2 = fresh_dir("analyze_iso");
  REQUIRE(cmd_analyze(cfg, dir2.string(), diag) == 0);
  std::istringstream in2(slurp((dir2 / "rates.csv").string()));
  CHECK(std::abs(read_rate_csv(in2).worst_at(2000) - 0.5) <= 0.01);

  // sweep csv round-trips through the generic reader
  cfg.dynamics = "ci";
  cfg.checkpoints.clear();
  cfg.iters = 500;
  SweepGrid grid;
  grid.points = 20;
  const fs::path dir3 = fresh_dir("sweep_rt");
  REQUIRE(cmd_sweep_b0(cfg, dir3.string(), grid, diag) == 0);
  const std::string text = slurp((dir3 / "sweep.csv").string());
  std::istringstream sin(text);
  const CsvTable t = read_csv(sin);
  std::ostringstream sout;
  write_csv(sout, t);
  CHECK(sout.str() == text);
}

TEST_CASE("analyze rejects broken assumptions with exit code 2") {
  SUBCASE("disconnected graph names the algebraic connectivity") {
    ExperimentConfig cfg = parse_config(kStandardConfig);
    cfg.graph = GraphSpec::edge_list(3, {{0, 2}});
    cfg.sensing.m0 = Eigen::Vector3d(-1, -1, -1);
    cfg.sensing.m1 = Eigen::Vector3d(1, 1, 1);
    cfg.sensing.s_zeta = Eigen::Matrix3d::Identity();
    cfg.comm.s_v = 0.25 * Eigen::Matrix3d::Identity();
    std::ostringstream diag;
    CHECK(cmd_analyze(cfg, fresh_dir("analyze_disc").string(), diag) == 2);
    CHECK(diag.str().find("network_connected") != std::string::npos);
  }
  SUBCASE("zero signal fails global detectability") {
    ExperimentConfig cfg = parse_config(kStandardConfig);
    cfg.sensing.m1 = cfg.sensing.m0;
    std::ostringstream diag;
    CHECK(cmd_analyze(cfg, fresh_dir("analyze_zero").string(), diag) == 2);
    CHECK(diag.str().find("globally_detectable") != std::string::npos);
  }
}

TEST_CASE("simulate golden run and csv round trips") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.trials = 1;
  cfg.iters = 5;
  cfg.checkpoints = {1, 2, 3, 4, 5};
  cfg.seed = 424242;
  const fs::path dir = fresh_dir("simulate_golden");
  std::ostringstream diag;
  REQUIRE(cmd_simulate(cfg, dir.string(), diag) == 0);

  const std::string results = slurp((dir / "results.csv").string());
  const std::string golden =
      slurp(std::string(CIDET_TEST_DATA_DIR) + "/golden_results.csv");
  CHECK(results == golden);

  // csv parses back and re-serializes identically
  std::istringstream in(results);
  const CsvTable t = read_csv(in);
  CHECK(t.column("p_hat") >= 0);
  std::ostringstream out;
  write_csv(out, t);
  CHECK(out.str() == results);
}

TEST_CASE("simulate refuses analytic-only configs") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.trials = 0;
  std::ostringstream diag;
  CHECK_THROWS_AS(cmd_simulate(cfg, fresh_dir("sim_m0").string(), diag),
                  ConfigError);
}

TEST_CASE("simulate compares empirical and exact moments") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.trials = 500;
  cfg.iters = 50;
  cfg.checkpoints = {10, 50};
  const fs::path dir = fresh_dir("simulate_cmp");
  std::ostringstream diag;
  REQUIRE(cmd_simulate(cfg, dir.string(), diag) == 0);
  std::istringstream in(slurp((dir / "comparison.csv").string()));
  const CsvTable t = read_csv(in);
  REQUIRE(t.rows.size() == 4);  // 2 checkpoints x 2 sensors
  const int zcol = t.column("z_mean");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(t.num(r, zcol) <= 5.0);
  }
  CHECK(fs::exists(dir / "dsnr_growth.json"));

  // the empirical-moment file follows the trajectory schema
  std::istringstream min(slurp((dir / "moments_empirical.csv").string()));
  const MomentTrajectory emp = read_trajectory_csv(min);
  CHECK(emp.records.size() == 2);
}

TEST_CASE("sweep-b0 brackets the closed-form optimum") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.iters = 1000;
  cfg.checkpoints.clear();
  const fs::path dir = fresh_dir("sweep");
  std::ostringstream diag;
  SweepGrid grid;
  grid.points = 50;
  grid.b0_min = 0.1;
  grid.b0_max = 12.6;
  REQUIRE(cmd_sweep_b0(cfg, dir.string(), grid, diag) == 0);
  const json s = json::parse(slurp((dir / "sweep_summary.json").string()));
  CHECK(s["within_one_step"].get<bool>());
  CHECK_FALSE(s["argmax_at_boundary"].get<bool>());
  CHECK(s["objective_at_optimal"].get<double>() ==
        doctest::Approx(s["bound_at_optimal_closed_form"].get<double>())
            .epsilon(1e-12));

  SUBCASE("single-point grid is the trivial argmax") {
    SweepGrid one;
    one.points = 1;
    one.b0_min = 0.7;
    one.b0_max = 0.7;
    const fs::path d1 = fresh_dir("sweep_one");
    REQUIRE(cmd_sweep_b0(cfg, d1.string(), one, diag) == 0);
    const json js = json::parse(slurp((d1 / "sweep_summary.json").string()));
    CHECK(js["grid_argmax_b0"].get<double>() == doctest::Approx(0.7));
    CHECK(js["argmax_at_boundary"].get<bool>());
  }
  SUBCASE("grid excluding the optimum flags the boundary") {
    SweepGrid off;
    off.points = 20;
    off.b0_min = 3.0;
    off.b0_max = 10.0;
    const fs::path d2 = fresh_dir("sweep_off");
    REQUIRE(cmd_sweep_b0(cfg, d2.string(), off, diag) == 0);
    const json js = json::parse(slurp((d2 / "sweep_summary.json").string()));
    CHECK(js["argmax_at_boundary"].get<bool>());
  }
  SUBCASE("empty grid is rejected") {
    SweepGrid bad;
    bad.points = 0;
    CHECK_THROWS_AS(
        cmd_sweep_b0(cfg, fresh_dir("sweep_bad").string(), bad, diag),
        ConfigError);
  }
}

TEST_CASE("sweep-b0 needs equal local snr") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.sensing.m0 = Eigen::Vector2d(-1.0, 0.0);
  cfg.sensing.m1 = Eigen::Vector2d(1.0, 0.0);
  cfg.schedule_b0 = 1.0;
  std::ostringstream diag;
  SweepGrid grid;
  CHECK(cmd_sweep_b0(cfg, fresh_dir("sweep_uneq").string(), grid, diag) == 2);
}

TEST_CASE("compare-md and payoff") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.iters = 10000;
  cfg.checkpoints.clear();

  SUBCASE("head to head favors the harmonic weights") {
    const fs::path dir = fresh_dir("compare");
    std::ostringstream diag;
    REQUIRE(cmd_compare_md(cfg, dir.string(), diag) == 0);
    const json c = json::parse(slurp((dir / "md_certificate.json").string()));
    CHECK(c["ci_beats_md"].get<bool>());
    CHECK(c["bounded_away"].get<bool>());
    CHECK(c["min_trace_ktau"].get<double>() > 0.0);

    // every emitted csv reads back and re-serializes byte-identically
    for (const char* name : {"compare_md.csv", "moments.csv"}) {
      if (!fs::exists(dir / name)) continue;
      const std::string text = slurp((dir / name).string());
      std::istringstream in(text);
      const CsvTable t = read_csv(in);
      std::ostringstream out;
      write_csv(out, t);
      CHECK(out.str() == text);
    }
  }
  SUBCASE("out-of-range tau is rejected") {
    cfg.md.tau = 1.5;
    std::ostringstream diag;
    CHECK_THROWS_AS(
        cmd_compare_md(cfg, fresh_dir("compare_bad").string(), diag),
        ConfigError);
  }
  SUBCASE("payoff verdict with the standard gain") {
    const fs::path dir = fresh_dir("payoff_yes");
    std::ostringstream diag;
    REQUIRE(cmd_payoff(cfg, dir.string(), diag) == 0);
    const json p = json::parse(slurp((dir / "payoff.json").string()));
    CHECK(p["threshold"].get<double>() == doctest::Approx(3.375).epsilon(1e-12));
    CHECK(p["achieved"].get<bool>());
    CHECK(p["cross_check_consistent"].get<bool>());
  }
  SUBCASE("low gain does not achieve the payoff") {
    cfg.comm.s_v = 4.0 * Eigen::Matrix2d::Identity();  // g_c = 1
    cfg.schedule_b0 = 1.0;  // keep the schedule admissible
    const fs::path dir = fresh_dir("payoff_no");
    std::ostringstream diag;
    REQUIRE(cmd_payoff(cfg, dir.string(), diag) == 0);
    const json p = json::parse(slurp((dir / "payoff.json").string()));
    CHECK_FALSE(p["achieved"].get<bool>());
  }
}

TEST_CASE("numerical failures exit with code 3") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.schedule_kind = "constant";
  cfg.schedule_alpha = 1.5;  // alpha * lambda_n = 3 > 2
  cfg.trials = 4;
  cfg.iters = 10;
  cfg.checkpoints = {10};
  std::ostringstream diag;
  CHECK(cmd_simulate(cfg, fresh_dir("numfail").string(), diag) == 3);
}

TEST_CASE("reproducible across thread caps via the environment") {
  ExperimentConfig cfg = parse_config(kStandardConfig);
  cfg.trials = 200;
  cfg.iters = 50;
  cfg.checkpoints = {10, 50};
  const fs::path d1 = fresh_dir("threads1");
  const fs::path d2 = fresh_dir("threads2");
  std::ostringstream diag;

  setenv("CIDET_THREADS", "1", 1);
  REQUIRE(cmd_simulate(cfg, d1.string(), diag) == 0);
  setenv("CIDET_THREADS", "4", 1);
  REQUIRE(cmd_simulate(cfg, d2.string(), diag) == 0);
  unsetenv("CIDET_THREADS");

  CHECK(slurp((d1 / "results.csv").string()) ==
        slurp((d2 / "results.csv").string()));
  CHECK(slurp((d1 / "moments_empirical.csv").string()) ==
        slurp((d2 / "moments_empirical.csv").string()));
}
