#include "cidet/perf.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cidet/csv.hpp"
#include "cidet/schedule.hpp"

namespace cidet {

namespace {

constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))

double require_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be > 0");
  }
  return v;
}

}  // namespace

double log_q(double t) {
  if (t < 8.0) {
    return std::log(0.5 * std::erfc(t * 0.7071067811865476));
  }
  // tail series 1 - 1/t^2 + 3/t^4 - 15/t^6 + ...; terms shrink until
  // 2n+1 > t^2, far below double precision for t >= 8
  const double inv_t2 = 1.0 / (t * t);
  double term = 1.0;
  double sum = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= 64; ++n) {
    term *= -(2.0 * n - 1.0) * inv_t2;
    if (std::abs(term) >= prev) break;  // series turned divergent
    sum += term;
    prev = std::abs(term);
    if (prev < 1e-17 * sum) break;
  }
  return -0.5 * t * t - std::log(t) - kLogSqrt2Pi + std::log(sum);
}

ErrorProb error_prob(double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("error_prob needs sigma > 0");
  ErrorProb e;
  const double t = mu / sigma;
  e.dsnr = t * t;
  e.log_p = log_q(t);
  e.p = std::exp(e.log_p);
  return e;
}

double RateTrajectory::rate_at(long k, int sensor) const {
  for (const auto& p : points) {
    if (p.k == k && p.sensor == sensor) return p.rate;
  }
  throw std::out_of_range("no rate recorded at requested (k, sensor)");
}

double RateTrajectory::worst_at(long k) const {
  for (const auto& w : worst) {
    if (w.first == k) return w.second;
  }
  throw std::out_of_range("no rate recorded at requested k");
}

RateTrajectory rate_trajectory(const MomentTrajectory& t) {
  RateTrajectory out;
  for (const auto& r : t.records) {
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < r.mu.size(); ++i) {
      RatePoint p;
      p.k = r.k;
      p.sensor = static_cast<int>(i);
      const double var = r.var(i);
      if (var <= 0.0) {
        // degenerate decision variable: uninformative when the mean is
        // also zero, deterministic otherwise
        p.rate = r.mu(i) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        p.dsnr_over_2k = p.rate == 0.0
                             ? 0.0
                             : std::numeric_limits<double>::infinity();
      } else {
        const ErrorProb e = error_prob(r.mu(i), std::sqrt(var));
        p.rate = -e.log_p / static_cast<double>(r.k);
        p.dsnr_over_2k = e.dsnr / (2.0 * static_cast<double>(r.k));
      }
      worst = std::min(worst, p.rate);
      out.points.push_back(p);
    }
    out.worst.emplace_back(r.k, worst);
  }
  return out;
}

GeneralRateBound rate_bound_general(const DerivedStats& d, double b0,
                                    double lambda2, int n) {
  require_positive(d.g_c, "g_c");
  require_positive(b0, "b0");
  require_positive(lambda2, "lambda2");
  const double damp = 1.0 + b0 * lambda2;
  const double raw = 1.0 - std::sqrt(static_cast<double>(n)) * d.c_mu / damp;
  GeneralRateBound out;
  out.clamped = raw < 0.0;
  const double numer = std::max(0.0, raw);
  const double denom =
      1.0 + 3.0 * n * d.c_sigma / damp + n * b0 * b0 / d.g_c;
  out.value = (d.ssnr / 8.0) * numer * numer / denom;
  return out;
}

EqualSnrBounds rate_bounds_equal_snr(double ssnr, int n, double b0,
                                     double lambda2, double g_c) {
  require_positive(b0, "b0");
  require_positive(lambda2, "lambda2");
  require_positive(g_c, "g_c");
  EqualSnrBounds out;
  const double noise = n * b0 * b0 / g_c;
  out.tight = (ssnr / 8.0) / (1.0 + n / (1.0 + b0 * lambda2) + noise);
  out.loose = (ssnr / 8.0) / (1.0 + n / (b0 * lambda2) + noise);
  return out;
}

double b0_tuning_objective(double ssnr, int n, double b0, double lambda2,
                           double g_c) {
  require_positive(b0, "b0");
  require_positive(lambda2, "lambda2");
  require_positive(g_c, "g_c");
  return (ssnr / 8.0) /
         (1.0 + n / (2.0 * b0 * lambda2) + n * b0 * b0 / g_c);
}

double rate_bound_at_optimal_b0(double ssnr, int n, double lambda2, double g_c) {
  require_positive(lambda2, "lambda2");
  require_positive(g_c, "g_c");
  const double c0 = payoff_constant();
  return (ssnr / 8.0) /
         (1.0 + n * c0 / (std::cbrt(lambda2 * lambda2) * std::cbrt(g_c)));
}

double rate_upper_power_family(double tau, const DerivedStats& d, double b0,
                               double lambda_n, double lambda1_sv, int n,
                               int sensor) {
  if (sensor < 0 || sensor >= d.n()) {
    throw std::invalid_argument("sensor index out of range");
  }
  if (tau < 1.0) return 0.0;
  if (tau > 1.0) return d.ssnr_i(sensor) / 8.0;
  const double snr_i = d.ssnr_i(sensor);
  require_positive(snr_i, "local snr");
  const double denom = 1.0 + n / (1.0 + 2.0 * b0 * lambda_n) +
                       b0 * b0 * lambda1_sv / (n * snr_i);
  return (d.ssnr / 8.0) / denom;
}

double StepSizeSequences::gain_pow_at(long k) const {
  for (const auto& s : samples) {
    if (s.k == k) return s.gain_pow;
  }
  throw std::out_of_range("no sequence sample at requested k");
}

StepSizeSequences step_size_sequences(double a, double b0, double lambda2,
                                      double lambda_n, double tau, long K,
                                      const std::vector<long>& marks) {
  require_positive(a, "a");
  require_positive(b0, "b0");
  require_positive(lambda2, "lambda2");
  require_positive(lambda_n, "lambda_n");
  if (tau < 0.0) throw std::invalid_argument("tau must be >= 0");
  if (K < 2) throw std::invalid_argument("K must be >= 2");

  const double b = b0 * lambda2;
  const double bp = b0 * lambda_n;
  if (b / (a + 1.0) >= 1.0) {
    throw std::invalid_argument(
        "inadmissible parameters: b0*lambda2/(a+1) >= 1");
  }

  StepSizeSequences out;
  out.tail_start = std::max<long>(2, K / 10);

  double z = 1.0 - b / (a + 1.0);
  double zb = (1.0 - bp / (a + 1.0)) * (1.0 - bp / (a + 1.0));
  double chi = 0.0;
  double chib = 0.0;

  std::vector<long> sorted_marks = marks;
  std::sort(sorted_marks.begin(), sorted_marks.end());
  auto marked = [&](long k) {
    return std::binary_search(sorted_marks.begin(), sorted_marks.end(), k);
  };

  double z_max = -1.0, z_min = std::numeric_limits<double>::infinity();
  double zb_max = -1.0, zb_min = std::numeric_limits<double>::infinity();

  long next_geo = 1000;
  auto maybe_sample = [&](long k) {
    bool hit = k == 1 || k == K || marked(k);
    if (k <= 1000) {
      if (k % 10 == 0) hit = true;
    } else if (k >= next_geo) {
      hit = true;
    }
    while (k >= next_geo) {
      next_geo = std::max(next_geo + 1, static_cast<long>(next_geo * 1.02));
    }
    if (hit) out.samples.push_back({k, z, chi, zb, chib});
  };

  maybe_sample(1);
  for (long k = 1; k < K; ++k) {
    const double kd = static_cast<double>(k);
    const double frac = kd / (kd + 1.0);
    z = (1.0 - b / (a + kd + 1.0)) * (frac * z + 1.0 / (kd + 1.0));
    const double fb = 1.0 - bp / (a + std::pow(kd + 1.0, tau));
    zb = fb * fb * (frac * zb + 1.0 / (kd + 1.0));
    const double ka = kd * (b0 / (a + kd));
    const double kb = kd * (b0 / (a + std::pow(kd, tau)));
    chi = (kd * chi + ka * ka) / (kd + 1.0);
    chib = (kd * chib + kb * kb) / (kd + 1.0);

    const long kk = k + 1;
    if (kk >= out.tail_start) {
      z_max = std::max(z_max, z);
      z_min = std::min(z_min, z);
      zb_max = std::max(zb_max, zb);
      zb_min = std::min(zb_min, zb);
    }
    maybe_sample(kk);
  }

  out.contraction_tail_max = z_max;
  out.contraction_tail_min = z_min;
  out.contraction_pow_tail_max = zb_max;
  out.contraction_pow_tail_min = zb_min;
  out.gain_final = chi;
  out.gain_pow_final = chib;
  return out;
}

MdTraceCertificate md_trace_certificate(const MomentTrajectory& t, double tau) {
  if (t.records.empty() || t.final_state.k < 1000) {
    throw std::invalid_argument("trajectory too short for a trace certificate");
  }
  MdTraceCertificate c;
  c.window_end = t.final_state.k;
  c.window_start = std::max<long>(1, c.window_end / 10);

  double max_trace = 0.0;
  bool first_in_window = true;
  c.min_trace_ktau = std::numeric_limits<double>::infinity();
  for (const auto& r : t.records) {
    max_trace = std::max(max_trace, r.trace);
    if (r.k < c.window_start) continue;
    const double v = r.trace * std::pow(static_cast<double>(r.k), tau);
    if (first_in_window) {
      c.trace_ktau_at_window_start = v;
      first_in_window = false;
    }
    c.min_trace_ktau = std::min(c.min_trace_ktau, v);
  }
  c.degenerate = max_trace == 0.0;
  if (c.degenerate) {
    c.min_trace_ktau = 0.0;
    c.bounded_away = false;
    return c;
  }
  c.bounded_away = c.min_trace_ktau > 0.0 &&
                   c.min_trace_ktau > 0.5 * c.trace_ktau_at_window_start;

  const RateTrajectory rates = rate_trajectory(t);
  double start_rate = 0.0;
  bool have_start = false;
  for (const auto& [k, rate] : rates.worst) {
    if (k >= c.window_start && !have_start) {
      start_rate = rate;
      have_start = true;
    }
  }
  c.worst_rate_at_window_start = start_rate;
  c.worst_rate_at_end = rates.worst.empty() ? 0.0 : rates.worst.back().second;
  c.worst_rate_decreasing = c.worst_rate_at_end < c.worst_rate_at_window_start;
  return c;
}

BoundReport make_bound_report(const DerivedStats& d, const LaplacianSpectrum& s,
                              double a, double b0,
                              std::optional<double> power_tau) {
  BoundReport r;
  r.a = a;
  r.b0 = b0;
  r.lambda2 = s.lambda2();
  r.lambda_n = s.lambda_n();
  r.ssnr = d.ssnr;
  r.csnr = d.csnr;
  r.g_c = d.g_c;
  r.c_mu = d.c_mu;
  r.c_sigma = d.c_sigma;
  r.chernoff_total = d.chernoff_total;
  r.chernoff_i.assign(d.chernoff_i.data(), d.chernoff_i.data() + d.chernoff_i.size());
  r.chernoff_best_isolated = d.chernoff_i.maxCoeff();
  r.general = rate_bound_general(d, b0, r.lambda2, d.n());

  const double lo = d.ssnr_i.minCoeff();
  const double hi = d.ssnr_i.maxCoeff();
  r.equal_snr = lo > 0.0 && (hi - lo) <= 1e-9 * std::max(1.0, hi);
  if (r.equal_snr) {
    const auto eq = rate_bounds_equal_snr(d.ssnr, d.n(), b0, r.lambda2, d.g_c);
    r.equal_tight = eq.tight;
    r.equal_loose = eq.loose;
    if (power_tau) {
      r.power_tau = *power_tau;
      r.power_upper = rate_upper_power_family(*power_tau, d, b0, r.lambda_n,
                                              d.s_v_lambda_min, d.n(), 0);
    }
  }
  if (std::isfinite(d.g_c) && d.g_c > 0.0) {
    r.optimal_b0_value = optimal_b0(d.g_c, r.lambda2);
    r.bound_at_optimal_b0 =
        rate_bound_at_optimal_b0(d.ssnr, d.n(), r.lambda2, d.g_c);
    const auto verdict = payoff_achieved(d.g_c, d.n(), r.lambda2);
    r.payoff_threshold_value = verdict.threshold;
    r.payoff_achieved_value = verdict.achieved;
  }
  return r;
}

std::string bound_report_json(const BoundReport& r) {
  nlohmann::json j;
  j["a"] = r.a;
  j["b0"] = r.b0;
  j["lambda2"] = r.lambda2;
  j["lambda_n"] = r.lambda_n;
  j["ssnr"] = r.ssnr;
  j["csnr"] = r.csnr;
  j["g_c"] = r.g_c;
  j["c_mu"] = r.c_mu;
  j["c_sigma"] = r.c_sigma;
  j["chernoff_total"] = r.chernoff_total;
  j["chernoff_i"] = r.chernoff_i;
  j["chernoff_best_isolated"] = r.chernoff_best_isolated;
  j["rate_bound_general"] = r.general.value;
  j["rate_bound_general_clamped"] = r.general.clamped;
  j["equal_snr"] = r.equal_snr;
  if (r.equal_snr) {
    j["rate_bound_equal_tight"] = r.equal_tight;
    j["rate_bound_equal_loose"] = r.equal_loose;
  }
  if (r.power_tau) {
    j["power_family_tau"] = *r.power_tau;
    j["rate_upper_power_family"] = *r.power_upper;
  }
  j["optimal_b0"] = r.optimal_b0_value;
  j["rate_bound_at_optimal_b0"] = r.bound_at_optimal_b0;
  j["payoff_threshold"] = r.payoff_threshold_value;
  j["payoff_achieved"] = r.payoff_achieved_value;
  return j.dump(2);
}

void write_rate_csv(const RateTrajectory& t, std::ostream& out) {
  out << "k,sensor,rate,dsnr_over_2k\n";
  for (const auto& p : t.points) {
    out << p.k << ',' << p.sensor << ',' << csv_double(p.rate) << ','
        << csv_double(p.dsnr_over_2k) << '\n';
  }
}

RateTrajectory read_rate_csv(std::istream& in) {
  CsvTable t = read_csv(in);
  const int ck = t.column("k");
  const int cs = t.column("sensor");
  const int cr = t.column("rate");
  const int cd = t.column("dsnr_over_2k");
  if (ck < 0 || cs < 0 || cr < 0 || cd < 0) {
    throw std::runtime_error("rate csv missing columns");
  }
  RateTrajectory out;
  long cur_k = -1;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    RatePoint p;
    p.k = static_cast<long>(t.integer(r, ck));
    p.sensor = static_cast<int>(t.integer(r, cs));
    p.rate = t.num(r, cr);
    p.dsnr_over_2k = t.num(r, cd);
    if (p.k != cur_k) {
      if (cur_k >= 0) out.worst.emplace_back(cur_k, worst);
      cur_k = p.k;
      worst = std::numeric_limits<double>::infinity();
    }
    worst = std::min(worst, p.rate);
    out.points.push_back(p);
  }
  if (cur_k >= 0) out.worst.emplace_back(cur_k, worst);
  return out;
}

}  // namespace cidet
