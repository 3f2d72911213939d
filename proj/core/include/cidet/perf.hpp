#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cidet/model.hpp"
#include "cidet/moments.hpp"

namespace cidet {

// log of the standard normal right-tail probability. Evaluated through
// erfc below t = 8 and through the tail expansion
//   log Q(t) = -t^2/2 - log(t sqrt(2 pi)) + log(1 - t^-2 + 3 t^-4 - ...)
// at and above it, so the result stays finite far past the erfc underflow
// point. Monotone decreasing in t.
double log_q(double t);

struct ErrorProb {
  double p = 0.0;      // may underflow to 0; log_p stays finite
  double log_p = 0.0;
  double dsnr = 0.0;   // (mu/sigma)^2
};

// Error probability Q(mu/sigma) of a Gaussian decision variable with
// symmetric means and a zero threshold. Requires sigma > 0.
ErrorProb error_prob(double mu, double sigma);

struct RatePoint {
  long k = 0;
  int sensor = 0;
  double rate = 0.0;          // -log P^e(k) / k
  double dsnr_over_2k = 0.0;
};

struct RateTrajectory {
  std::vector<RatePoint> points;                    // sensor-major within k
  std::vector<std::pair<long, double>> worst;       // per k: min rate over sensors

  double rate_at(long k, int sensor) const;  // throws when absent
  double worst_at(long k) const;
};

// Converts exact-moment trajectories into per-sensor finite-k exponent
// estimates. A degenerate sensor (zero mean and zero variance) reports a
// zero rate; zero variance with nonzero mean reports +infinity.
RateTrajectory rate_trajectory(const MomentTrajectory& t);

// Lower bound on the error exponent at every sensor for the harmonic
// step-size family, valid with unequal local SNRs. The squared numerator
// term is clamped at zero (flagged) when the bound is vacuous.
struct GeneralRateBound {
  double value = 0.0;
  bool clamped = false;
};
GeneralRateBound rate_bound_general(const DerivedStats& d, double b0,
                                    double lambda2, int n);

// Equal-local-SNR exponent lower bounds; the loose form replaces
// 1/(1 + b0 lambda2) by 1/(b0 lambda2) in the middle term.
struct EqualSnrBounds {
  double tight = 0.0;
  double loose = 0.0;
};
EqualSnrBounds rate_bounds_equal_snr(double ssnr, int n, double b0,
                                     double lambda2, double g_c);

// Scalar objective whose closed-form maximizer is optimal_b0:
//   (ssnr/8) / (1 + n/(2 b0 lambda2) + n b0^2 / g_c).
// Note the loose bound as displayed above carries n/(b0 lambda2) without
// the 1/2; its literal maximizer is (g_c/(2 lambda2))^(1/3), which is not
// the b0 the optimized bound and the payoff threshold are built on. The
// sweep machinery therefore optimizes this form, which is the one the
// optimal-b0 analysis is consistent with.
double b0_tuning_objective(double ssnr, int n, double b0, double lambda2,
                           double g_c);

// Value of the tuning objective at the optimal b0:
//   (ssnr/8) / (1 + n c0 / (lambda2^(2/3) g_c^(1/3))).
double rate_bound_at_optimal_b0(double ssnr, int n, double lambda2, double g_c);

// Upper bound on the exponent when the weight family decays as
// b0/(a + k^tau): 0 for tau < 1, the isolated exponent for tau > 1, and a
// finite-denominator expression at tau = 1.
double rate_upper_power_family(double tau, const DerivedStats& d, double b0,
                               double lambda_n, double lambda1_sv, int n,
                               int sensor);

// Scalar companion recursions for a step-size family: the running average
// of deviation-matrix norm products (contraction) and of the squared
// weighted step sizes (gain), in both the harmonic form (with lambda2) and
// the squared power form (with lambda_n and tau).
struct SequenceSample {
  long k = 0;
  double contraction = 0.0;      // avg of products (1 - b0*lambda2/(a+j))
  double gain = 0.0;             // avg of (j alpha_j)^2
  double contraction_pow = 0.0;  // avg of squared products (1 - b0*lambda_n*beta_j)^2
  double gain_pow = 0.0;         // avg of (j beta_j)^2
};

struct StepSizeSequences {
  std::vector<SequenceSample> samples;
  long tail_start = 0;  // statistics window [tail_start, K]
  double contraction_tail_max = 0.0;
  double contraction_tail_min = 0.0;
  double gain_final = 0.0;
  double contraction_pow_tail_max = 0.0;
  double contraction_pow_tail_min = 0.0;
  double gain_pow_final = 0.0;

  double gain_pow_at(long k) const;  // requires k among recorded marks
};

// Rejects b0*lambda2/(a+1) >= 1 (nonpositive initial value).
StepSizeSequences step_size_sequences(double a, double b0, double lambda2,
                                      double lambda_n, double tau, long K,
                                      const std::vector<long>& marks = {});

// Certificate that the mixed-time-scale detector's covariance trace decays
// no faster than 1/k^tau: the minimum of trace * k^tau over the last decade
// must stay above half its value at the window start (and above zero).
struct MdTraceCertificate {
  long window_start = 0;
  long window_end = 0;
  double trace_ktau_at_window_start = 0.0;
  double min_trace_ktau = 0.0;
  bool degenerate = false;   // identically zero trace
  bool bounded_away = false;
  double worst_rate_at_window_start = 0.0;
  double worst_rate_at_end = 0.0;
  bool worst_rate_decreasing = false;
};
MdTraceCertificate md_trace_certificate(const MomentTrajectory& t, double tau);

// All bounds evaluated for one configuration.
struct BoundReport {
  double a = 0.0;
  double b0 = 0.0;
  double lambda2 = 0.0;
  double lambda_n = 0.0;
  double ssnr = 0.0;
  double csnr = 0.0;
  double g_c = 0.0;
  double c_mu = 0.0;
  double c_sigma = 0.0;
  double chernoff_total = 0.0;
  double chernoff_best_isolated = 0.0;
  std::vector<double> chernoff_i;
  GeneralRateBound general;
  bool equal_snr = false;        // equal-local-SNR fields valid when true
  double equal_tight = 0.0;
  double equal_loose = 0.0;
  double optimal_b0_value = 0.0;
  double bound_at_optimal_b0 = 0.0;
  std::optional<double> power_tau;
  std::optional<double> power_upper;
  double payoff_threshold_value = 0.0;
  bool payoff_achieved_value = false;
};

BoundReport make_bound_report(const DerivedStats& d, const LaplacianSpectrum& s,
                              double a, double b0,
                              std::optional<double> power_tau = std::nullopt);

// Canonical JSON (sorted keys, shortest round-trip floats); byte-identical
// for identical inputs.
std::string bound_report_json(const BoundReport& r);

// CSV columns: k, sensor, rate, dsnr_over_2k.
void write_rate_csv(const RateTrajectory& t, std::ostream& out);
RateTrajectory read_rate_csv(std::istream& in);

}  // namespace cidet
