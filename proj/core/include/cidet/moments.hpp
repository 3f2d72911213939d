#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "cidet/model.hpp"
#include "cidet/schedule.hpp"

namespace cidet {

// Exact first and second moments of the decision-variable vector at
// iteration k, conditioned on H1. Under H0 the mean is the negation and
// the covariance is identical.
struct MomentState {
  long k = 1;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

struct TrajectoryRecord {
  long k = 0;
  Eigen::VectorXd mu;
  Eigen::VectorXd var;  // diagonal of sigma
  double trace = 0.0;
};

struct MomentTrajectory {
  std::vector<TrajectoryRecord> records;
  MomentState final_state;

  const TrajectoryRecord* at(long k) const;  // nullptr when k not recorded
};

// Everything the consensus+innovations moment recursion needs per step.
struct CiDynamics {
  Eigen::MatrixXd laplacian;
  double lambda_n = 0.0;
  WeightSchedule schedule;
  Eigen::MatrixXd comm_cov;    // S_v
  Eigen::MatrixXd innov_cov;   // S_eta
  Eigen::VectorXd innov_mean;  // m_eta1
};

CiDynamics make_ci_dynamics(const NetworkGraph& g, const LaplacianSpectrum& s,
                            const WeightSchedule& sched, const DerivedStats& d,
                            const CommModel& c);

// x(1) = eta(1): mean m_eta1, covariance S_eta.
MomentState ci_init(const DerivedStats& d);

// One step of the exact moment recursion. With W = I - alpha_k L and
// c = k/(k+1):
//   mu'    = c W mu + m_eta1 / (k+1)
//   sigma' = c^2 (W sigma W' + alpha_k^2 S_v) + S_eta / (k+1)^2
// Rejects alpha_k * lambda_n > 2 (contraction violated).
MomentState ci_step(const MomentState& st, const CiDynamics& dyn);

// Iterates ci_step to K. Records every `record_every` iterations up to
// k = 1000 and geometrically (ratio 1.02) beyond, plus k = 1, k = K and
// any explicit marks.
MomentTrajectory ci_run(const CiDynamics& dyn, long K, long record_every = 10,
                        const std::vector<long>& marks = {});

// Exact state at K without recording overhead.
MomentState ci_state_at(const CiDynamics& dyn, long K);

// Direct evaluation of the explicit solution (product-form transition
// matrices); O(K^2) and intended as a cross-check at small K.
MomentState ci_closed_form(const CiDynamics& dyn, long K);

// Limit of the mean: (I + b0 L)^{-1} m_eta1.
Eigen::VectorXd mu_limit(const DerivedStats& d, double b0,
                         const Eigen::MatrixXd& laplacian);

// Mixed-time-scale rival detector: consensus weight b/(k+1)^tau and
// innovation weight a/(k+1)^tau with tau in (0.5, 1).
struct MdParams {
  double a = 1.0;
  double b = 1.0;
  double tau = 0.75;
};

struct MdDynamics {
  Eigen::MatrixXd laplacian;
  MdParams params;
  Eigen::MatrixXd comm_cov;
  Eigen::MatrixXd innov_cov;
  Eigen::VectorXd innov_mean;
};

// Rejects tau outside (0.5, 1) unless allow_any_tau is set.
MdDynamics make_md_dynamics(const NetworkGraph& g, const MdParams& p,
                            const DerivedStats& d, const CommModel& c,
                            bool allow_any_tau = false);

// W = I - beta_k L - alpha_k I:
//   mu'    = W mu + alpha_k m_eta1
//   sigma' = W sigma W' + alpha_k^2 S_eta + beta_k^2 S_v
// The innovation entering each step is a fresh sample, so the covariance
// recursion assumes independence of the current state.
MomentState md_step(const MomentState& st, const MdDynamics& dyn);

MomentTrajectory md_run(const MdDynamics& dyn, long K, long record_every = 10,
                        const std::vector<long>& marks = {});

struct ScalarMoments {
  double mean = 0.0;
  double variance = 0.0;
  double dsnr = 0.0;
  bool detectable = false;
};

// Fusion-center statistic: mean ssnr/2, variance ssnr/k, DSNR k*ssnr/4.
ScalarMoments centralized_moments(const DerivedStats& d, long k);

// Single sensor working in isolation; flagged undetectable when its local
// SNR is zero.
ScalarMoments isolated_moments(const DerivedStats& d, int sensor, long k);

// One-column trajectories of the closed-form detectors, recorded on the
// same policy as ci_run, for side-by-side rate comparisons.
MomentTrajectory centralized_trajectory(const DerivedStats& d, long K,
                                        long record_every = 10,
                                        const std::vector<long>& marks = {});
MomentTrajectory isolated_trajectory(const DerivedStats& d, int sensor, long K,
                                     long record_every = 10,
                                     const std::vector<long>& marks = {});

// CSV columns: k, sensor, mu, sigma2. The JSON sidecar holds the full
// final covariance.
void write_trajectory_csv(const MomentTrajectory& t, std::ostream& out);
MomentTrajectory read_trajectory_csv(std::istream& in);
std::string trajectory_sidecar_json(const MomentTrajectory& t);

}  // namespace cidet
