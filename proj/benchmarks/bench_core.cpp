#include <benchmark/benchmark.h>

#include "cidet/graph.hpp"
#include "cidet/model.hpp"
#include "cidet/moments.hpp"
#include "cidet/montecarlo.hpp"
#include "cidet/perf.hpp"

namespace {

using namespace cidet;

struct Fixture {
  NetworkGraph graph;
  LaplacianSpectrum spec;
  DerivedStats stats;
  CommModel comm;
  CiDynamics dyn;

  explicit Fixture(int n)
      : graph(build_graph(GraphSpec::path(n))), spec(spectrum(graph)) {
    SensingModel m;
    m.m0 = Eigen::VectorXd::Constant(n, -1.0);
    m.m1 = Eigen::VectorXd::Constant(n, 1.0);
    m.s_zeta = Eigen::MatrixXd::Identity(n, n);
    comm.s_v = 0.25 * Eigen::MatrixXd::Identity(n, n);
    stats = snr_stats(m, comm);
    const double b0 = optimal_b0(stats.g_c, spec.lambda2());
    dyn = make_ci_dynamics(graph, spec,
                           WeightSchedule::alpha_harmonic(b0 * spec.lambda_n(), b0),
                           stats, comm);
  }
};

void BM_Spectrum(benchmark::State& state) {
  const NetworkGraph g = build_graph(GraphSpec::cycle(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(spectrum(g));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Spectrum)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_CiStep(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  MomentState st = ci_init(f.stats);
  for (auto _ : state) {
    st = ci_step(st, f.dyn);
    benchmark::DoNotOptimize(st);
    if (st.k > 1000000) st.k = 1;  // keep weights away from zero
  }
}
BENCHMARK(BM_CiStep)->RangeMultiplier(4)->Range(2, 128);

void BM_CiRun10k(benchmark::State& state) {
  Fixture f(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ci_state_at(f.dyn, 10000));
  }
}
BENCHMARK(BM_CiRun10k);

void BM_StepSizeSequences(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        step_size_sequences(2.0, 1.0, 2.0, 2.0, 0.75, state.range(0)));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_StepSizeSequences)->Range(1 << 10, 1 << 20)->Complexity();

void BM_SimulateTrials(benchmark::State& state) {
  Fixture f(3);
  const NoiseSpec sensing = make_noise_spec(NoiseFamily::gaussian, f.stats.s_eta);
  const NoiseSpec comm = make_noise_spec(NoiseFamily::gaussian, f.comm.s_v);
  const SimProblem p = make_sim_problem(f.graph, f.spec, f.dyn.schedule, f.stats,
                                        f.comm, MdParams{}, sensing, comm);
  SimRequest req;
  req.trials = state.range(0);
  req.iters = 100;
  req.checkpoints = {100};
  req.max_threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(p, req));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateTrials)->Range(64, 1024);

void BM_LogQ(benchmark::State& state) {
  double t = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_q(t));
    t += 0.1;
    if (t > 40.0) t = 0.05;
  }
}
BENCHMARK(BM_LogQ);

}  // namespace

BENCHMARK_MAIN();
