#include "cidet/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace cidet {

WeightSchedule WeightSchedule::alpha_harmonic(double a, double b0) {
  if (a <= 0.0 || b0 <= 0.0) {
    throw std::invalid_argument("harmonic schedule needs a, b0 > 0");
  }
  WeightSchedule s;
  s.kind = Kind::alpha_harmonic;
  s.a = a;
  s.b0 = b0;
  return s;
}

WeightSchedule WeightSchedule::beta_power(double a, double b0, double tau) {
  if (a <= 0.0 || b0 <= 0.0 || tau < 0.0) {
    throw std::invalid_argument("power schedule needs a, b0 > 0 and tau >= 0");
  }
  WeightSchedule s;
  s.kind = Kind::beta_power;
  s.a = a;
  s.b0 = b0;
  s.tau = tau;
  return s;
}

WeightSchedule WeightSchedule::constant(double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("constant weight must be > 0");
  WeightSchedule s;
  s.kind = Kind::constant;
  s.alpha = alpha;
  return s;
}

double weight_at(const WeightSchedule& s, long k) {
  if (k < 1) throw std::invalid_argument("iteration index starts at 1");
  switch (s.kind) {
    case WeightSchedule::Kind::alpha_harmonic:
      return s.b0 / (s.a + static_cast<double>(k));
    case WeightSchedule::Kind::beta_power:
      // tau == 1 reduces exactly to the harmonic family
      if (s.tau == 1.0) return s.b0 / (s.a + static_cast<double>(k));
      return s.b0 / (s.a + std::pow(static_cast<double>(k), s.tau));
    case WeightSchedule::Kind::constant:
      return s.alpha;
  }
  return 0.0;
}

Checklist validate_alpha(double a, double b0, const LaplacianSpectrum& s,
                         double c_mu) {
  const double lam2 = s.lambda2();
  const double lam_n = s.lambda_n();
  if (!(lam2 > 0.0) || !is_connected(s)) {
    throw std::invalid_argument("step-size validation needs a connected graph");
  }

  Checklist cl;
  {
    CheckItem it;
    it.name = "offset_lower_bound";  // a >= b0 * lambda_n
    it.value = a - b0 * lam_n;
    it.pass = a >= b0 * lam_n && b0 * lam_n > 0.0;
    if (!it.pass) it.detail = "a < b0 * lambda_n";
    cl.items.push_back(std::move(it));
  }
  {
    CheckItem it;
    it.name = "gain_lower_bound";  // b0 > max(0, (c_mu - 1) / lambda2)
    const double need = std::max(0.0, (c_mu - 1.0) / lam2);
    it.value = b0 - need;
    it.pass = b0 > need;
    if (!it.pass) it.detail = "b0 too small for the mean bias bound";
    cl.items.push_back(std::move(it));
  }
  {
    // deviation norm of the first averaging matrix; lies in
    // (1 - lambda2/lambda_n, 1) whenever the offset bound holds
    CheckItem it;
    it.name = "deviation_norm";
    it.value = 1.0 - b0 * lam2 / (a + 1.0);
    it.pass = it.value > 1.0 - lam2 / lam_n - 1e-12 && it.value < 1.0;
    if (!it.pass) it.detail = "first-step deviation norm outside its interval";
    cl.items.push_back(std::move(it));
  }
  return cl;
}

double optimal_b0(double g_c, double lambda2) {
  if (!(g_c > 0.0)) throw std::invalid_argument("optimal_b0 needs g_c > 0");
  if (!(lambda2 > 0.0)) throw std::invalid_argument("optimal_b0 needs lambda2 > 0");
  return std::cbrt(g_c / (4.0 * lambda2));
}

double payoff_constant() { return 1.5 / std::cbrt(2.0); }

double payoff_threshold(int n, double lambda2) {
  if (n < 2) throw std::invalid_argument("payoff threshold undefined for n < 2");
  if (!(lambda2 > 0.0)) {
    throw std::invalid_argument("payoff threshold needs lambda2 > 0");
  }
  const double c = payoff_constant() * n / (n - 1.0);
  return c * c * c / (lambda2 * lambda2);
}

PayoffVerdict payoff_achieved(double g_c, int n, double lambda2) {
  PayoffVerdict v;
  v.threshold = payoff_threshold(n, lambda2);
  v.achieved = g_c >= v.threshold;
  v.b0_used = optimal_b0(g_c, lambda2);
  return v;
}

}  // namespace cidet
