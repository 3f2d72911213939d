#pragma once

#include "cidet/common.hpp"
#include "cidet/graph.hpp"

namespace cidet {

// Step-size family the detector weighs its neighbors' messages with.
//   alpha_harmonic: b0 / (a + k)
//   beta_power:     b0 / (a + k^tau)
//   constant:       alpha (running-consensus baseline; not admissible
//                   under communication noise)
struct WeightSchedule {
  enum class Kind { alpha_harmonic, beta_power, constant };

  Kind kind = Kind::alpha_harmonic;
  double a = 1.0;
  double b0 = 1.0;
  double tau = 1.0;
  double alpha = 0.0;

  static WeightSchedule alpha_harmonic(double a, double b0);
  static WeightSchedule beta_power(double a, double b0, double tau);
  static WeightSchedule constant(double alpha);
};

double weight_at(const WeightSchedule& s, long k);

// Admissibility of the harmonic family: a >= b0 * lambda_n and
// b0 > max(0, (c_mu - 1) / lambda2). Also reports the deviation norm
// 1 - b0*lambda2/(a+1) of the first averaging matrix.
Checklist validate_alpha(double a, double b0, const LaplacianSpectrum& s, double c_mu);

// Closed-form maximizer of the tuning objective: (g_c / (4*lambda2))^(1/3).
double optimal_b0(double g_c, double lambda2);

// Exact form (3/2) * 2^(-1/3) of the constant in the payoff threshold.
double payoff_constant();

// Communication-gain level above which the worst cooperating sensor beats
// the best isolated one: (c0*n/(n-1))^3 / lambda2^2.
double payoff_threshold(int n, double lambda2);

struct PayoffVerdict {
  double threshold = 0.0;
  bool achieved = false;
  double b0_used = 0.0;  // the optimal b0 the verdict assumes
};
PayoffVerdict payoff_achieved(double g_c, int n, double lambda2);

}  // namespace cidet
