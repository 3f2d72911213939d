#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "cidet/model.hpp"
#include "cidet/moments.hpp"
#include "cidet/schedule.hpp"

namespace cidet {

enum class NoiseFamily { gaussian, laplace, uniform };

// A noise source: zero-mean draws with the given covariance, realized as
// mixing * w with w i.i.d. standardized draws from the family. The mixing
// factor is computed once (Cholesky, or eigenvalue square root when the
// covariance is singular).
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd mixing;
};

NoiseSpec make_noise_spec(NoiseFamily family, const Eigen::MatrixXd& covariance);

namespace rng {

// splitmix64; the per-(trial, k, channel) state derivation makes every
// draw independent of scheduling and worker count.
struct Stream {
  std::uint64_t state = 0;

  std::uint64_t next();
  double u01();       // [0, 1)
  double u01_open();  // (0, 1)
};

std::uint64_t derive(std::uint64_t master, std::uint64_t trial, std::uint64_t k,
                     std::uint64_t channel);

inline constexpr std::uint64_t kChannelSensing = 1;
inline constexpr std::uint64_t kChannelComm = 2;

}  // namespace rng

// Fills out[0..n) with i.i.d. zero-mean unit-variance draws: Box-Muller
// normals, Laplace with scale 1/sqrt(2), or uniform with half-width
// sqrt(3).
void standardized_draws(NoiseFamily family, rng::Stream& s, double* out, int n);

// One standardized noise vector for (trial, k, channel), already mixed to
// the spec's covariance. Exposed so tests can re-derive simulator paths.
Eigen::VectorXd noise_draw(const NoiseSpec& spec, std::uint64_t master,
                           std::uint64_t trial, long k, std::uint64_t channel);

enum class Dynamics { ci, md, centralized, isolated };
enum class Hypothesis { h0, h1 };

// Precomputed inputs shared by every trial.
struct SimProblem {
  Eigen::MatrixXd laplacian;
  double lambda_n = 0.0;
  WeightSchedule schedule;     // ci dynamics
  MdParams md;                 // md dynamics
  Eigen::VectorXd innov_mean;  // m_eta1; H0 negates it
  Eigen::VectorXd ssnr_i;      // isolated dynamics
  NoiseSpec sensing;           // covariance S_eta
  NoiseSpec comm;              // covariance S_v
  int n = 0;
};

// Validates that the noise specs match the model-derived covariances, that
// the mixing factors reproduce them, and that a non-Gaussian sensing family
// only appears with spatially independent (diagonal) sensing noise.
SimProblem make_sim_problem(const NetworkGraph& g, const LaplacianSpectrum& s,
                            const WeightSchedule& sched, const DerivedStats& d,
                            const CommModel& c, const MdParams& md,
                            const NoiseSpec& sensing, const NoiseSpec& comm);

struct SimRequest {
  Dynamics dynamics = Dynamics::ci;
  int sensor = 0;  // isolated dynamics
  Hypothesis hypothesis = Hypothesis::h1;
  long trials = 1;
  long iters = 1;
  std::vector<long> checkpoints;  // ascending, within [1, iters]
  std::uint64_t master_seed = 0;
  int max_threads = 0;  // 0: CIDET_THREADS env cap, else hardware
};

struct CheckpointStats {
  long k = 0;
  Eigen::VectorXi errors;  // per column of the simulated state
  Eigen::VectorXd sum_x;
  Eigen::MatrixXd sum_xx;
};

struct SimRun {
  Hypothesis hypothesis = Hypothesis::h1;
  long trials = 0;
  std::vector<int> sensor_ids;  // column -> sensor index (0 for centralized)
  std::vector<CheckpointStats> checkpoints;

  int checkpoint_index(long k) const;  // -1 when absent
  Eigen::VectorXd mean(int checkpoint) const;
  Eigen::MatrixXd covariance(int checkpoint) const;  // unbiased
  double error_rate(int checkpoint, int column) const;
};

// Trials are mutually independent and embarrassingly parallel; per-trial
// randomness derives only from (master_seed, trial, k, channel) and the
// reduction runs over fixed-size chunks in index order, so the result is
// bitwise identical for any worker count. Decision at a checkpoint: error
// under H1 iff x_i(k) <= 0, under H0 iff x_i(k) > 0.
SimRun simulate(const SimProblem& p, const SimRequest& req);

struct RateEstimate {
  double p_hat = 0.0;
  double rate = 0.0;
  double lo = 0.0;  // rate interval from a 95% Wilson interval on p_hat
  double hi = 0.0;
  bool below_resolution = false;  // zero errors observed
};

// Combines the two conditional error frequencies with equal priors and
// maps the interval through -log(p)/k.
std::vector<RateEstimate> empirical_rate(const SimRun& h1, const SimRun& h0,
                                         long k);

struct DsnrGrowthReport {
  std::vector<long> checkpoints;
  Eigen::MatrixXd dsnr;         // row: checkpoint, col: sensor
  Eigen::MatrixXd dsnr_over_k;
  Eigen::VectorXd slope;        // per sensor, LS fit through origin, last decade
  Eigen::VectorXd band_ratio;   // max/min of dsnr_over_k per sensor
  double reference_rate = 0.0;  // DSNR-scale lower bound, 2 * general bound
};

// Empirical DSNR growth from an existing H1 run.
DsnrGrowthReport dsnr_growth(const SimRun& run, double reference_rate);

// Convenience wrapper that simulates under H1 first.
DsnrGrowthReport dsnr_growth(const SimProblem& p, Dynamics dynamics, long trials,
                             const std::vector<long>& checkpoints,
                             std::uint64_t master_seed, double reference_rate);

// Worker count: max_threads if positive, else the CIDET_THREADS environment
// cap, else hardware concurrency.
int worker_count(int max_threads);

}  // namespace cidet
