#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "cidet/common.hpp"
#include "cidet/graph.hpp"

namespace cidet {

// Binary Gaussian hypothesis model: known mean vectors under each
// hypothesis and the sensing-noise covariance.
struct SensingModel {
  Eigen::VectorXd m0;
  Eigen::VectorXd m1;
  Eigen::MatrixXd s_zeta;  // symmetric positive definite
};

// Aggregated communication-noise covariance S_v.
struct CommModel {
  Eigen::MatrixXd s_v;  // symmetric positive semidefinite
};

// Everything the bounds and recursions consume, derived once from the
// sensing and communication models.
struct DerivedStats {
  Eigen::VectorXd m_eta1;   // innovation mean under H1; mean under H0 is -m_eta1
  Eigen::MatrixXd s_eta;    // innovation covariance
  double ssnr = 0.0;        // global sensing SNR
  Eigen::VectorXd ssnr_i;   // per-sensor sensing SNR
  double s_v_norm = 0.0;        // spectral norm of S_v
  double s_v_lambda_min = 0.0;  // smallest eigenvalue of S_v
  double csnr = 0.0;        // communication SNR
  double g_c = 0.0;         // communication gain
  double c_mu = 0.0;        // NaN when ssnr == 0
  double c_sigma = 0.0;     // NaN when ssnr == 0
  double chernoff_total = 0.0;   // ssnr / 8
  Eigen::VectorXd chernoff_i;    // ssnr_i / 8

  int n() const { return static_cast<int>(m_eta1.size()); }
};

// Mean and covariance of the per-step innovation vector. The mean under
// H0 is the negation of the returned mean.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> innovation_stats(const SensingModel& m);

DerivedStats snr_stats(const SensingModel& m, const CommModel& c);

struct Detectability {
  bool global = false;
  std::vector<bool> local;
};
Detectability detectability(const DerivedStats& d);

// Per-assumption pass/fail with the offending quantity:
//   noise_positive_definite, network_connected, globally_detectable,
//   equal_local_snr. Step-size admissibility is validated separately
//   (validate_alpha) because it needs schedule parameters.
Checklist validate_assumptions(const SensingModel& m, const CommModel& c,
                               const LaplacianSpectrum& s);

// Model file: JSON object with keys m0, m1 (arrays) and s_zeta, s_v
// (either {"scaled_identity": v} or a full row-major matrix).
std::pair<SensingModel, CommModel> parse_model(const std::string& json_text);
std::pair<SensingModel, CommModel> load_model(const std::string& path);

}  // namespace cidet
