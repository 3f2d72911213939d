#include "cidet/moments.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cidet/csv.hpp"

namespace cidet {

namespace {

// Record every `every` up to k = 1000, then geometrically with ratio 1.02;
// k = 1, k = K and explicit marks are always kept.
struct RecordPolicy {
  long every;
  std::vector<long> marks;  // sorted
  long next_geo = 1000;

  explicit RecordPolicy(long every_, std::vector<long> marks_, long K)
      : every(std::max<long>(1, every_)), marks(std::move(marks_)) {
    std::sort(marks.begin(), marks.end());
    marks.push_back(K);
  }

  bool want(long k) {
    bool hit = k == 1;
    if (k <= 1000) {
      if (k % every == 0) hit = true;
    } else if (k >= next_geo) {
      hit = true;
    }
    while (k >= next_geo) {
      next_geo = std::max(next_geo + 1, static_cast<long>(next_geo * 1.02));
    }
    for (long m : marks) {
      if (m == k) hit = true;
      if (m >= k) break;
    }
    return hit;
  }
};

void record(MomentTrajectory& t, const MomentState& st) {
  TrajectoryRecord r;
  r.k = st.k;
  r.mu = st.mu;
  r.var = st.sigma.diagonal();
  r.trace = st.sigma.trace();
  t.records.push_back(std::move(r));
}

void check_covariance_floor(const MomentState& st) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.sigma, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("covariance eigenvalue check failed to converge");
  }
  const double floor = -1e-10 * std::max(1.0, st.sigma.trace());
  if (es.eigenvalues()(0) < floor) {
    throw NumericalError("covariance lost positive semidefiniteness at k=" +
                         std::to_string(st.k));
  }
}

ScalarMoments scalar_moments(double snr, long k) {
  ScalarMoments s;
  s.detectable = snr > 0.0;
  s.mean = snr / 2.0;
  s.variance = snr / static_cast<double>(k);
  s.dsnr = static_cast<double>(k) * snr / 4.0;
  return s;
}

MomentTrajectory scalar_trajectory(double snr, long K, long record_every,
                                   const std::vector<long>& marks) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  MomentTrajectory t;
  RecordPolicy policy(record_every, marks, K);
  for (long k = 1; k <= K; ++k) {
    if (!policy.want(k)) continue;
    TrajectoryRecord r;
    r.k = k;
    r.mu = Eigen::VectorXd::Constant(1, snr / 2.0);
    r.var = Eigen::VectorXd::Constant(1, snr / static_cast<double>(k));
    r.trace = r.var(0);
    t.records.push_back(std::move(r));
  }
  t.final_state.k = K;
  t.final_state.mu = Eigen::VectorXd::Constant(1, snr / 2.0);
  t.final_state.sigma = Eigen::MatrixXd::Constant(1, 1, snr / static_cast<double>(K));
  return t;
}

}  // namespace

const TrajectoryRecord* MomentTrajectory::at(long k) const {
  for (const auto& r : records) {
    if (r.k == k) return &r;
  }
  return nullptr;
}

CiDynamics make_ci_dynamics(const NetworkGraph& g, const LaplacianSpectrum& s,
                            const WeightSchedule& sched, const DerivedStats& d,
                            const CommModel& c) {
  if (d.n() != g.n || c.s_v.rows() != g.n) {
    throw std::invalid_argument("dynamics inputs have mismatched dimensions");
  }
  CiDynamics dyn;
  dyn.laplacian = g.laplacian;
  dyn.lambda_n = s.lambda_n();
  dyn.schedule = sched;
  dyn.comm_cov = c.s_v;
  dyn.innov_cov = d.s_eta;
  dyn.innov_mean = d.m_eta1;
  return dyn;
}

MomentState ci_init(const DerivedStats& d) {
  MomentState st;
  st.k = 1;
  st.mu = d.m_eta1;
  st.sigma = d.s_eta;
  return st;
}

MomentState ci_step(const MomentState& st, const CiDynamics& dyn) {
  const long k = st.k;
  const double alpha = weight_at(dyn.schedule, k);
  if (alpha * dyn.lambda_n > 2.0) {
    throw NumericalError("step size alpha_k * lambda_n > 2 at k=" +
                         std::to_string(k));
  }
  const double c = static_cast<double>(k) / static_cast<double>(k + 1);
  const double kp1 = static_cast<double>(k + 1);

  MomentState out;
  out.k = k + 1;
  const Eigen::VectorXd wmu = st.mu - alpha * (dyn.laplacian * st.mu);
  out.mu = c * wmu + dyn.innov_mean / kp1;

  const Eigen::MatrixXd ws = st.sigma - alpha * (dyn.laplacian * st.sigma);
  const Eigen::MatrixXd wsw = ws - alpha * (ws * dyn.laplacian);
  Eigen::MatrixXd sig = c * c * (wsw + alpha * alpha * dyn.comm_cov) +
                        dyn.innov_cov / (kp1 * kp1);
  out.sigma = 0.5 * (sig + sig.transpose());
  return out;
}

MomentTrajectory ci_run(const CiDynamics& dyn, long K, long record_every,
                        const std::vector<long>& marks) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  DerivedStats init;
  init.m_eta1 = dyn.innov_mean;
  init.s_eta = dyn.innov_cov;
  MomentState st = ci_init(init);

  MomentTrajectory t;
  RecordPolicy policy(record_every, marks, K);
  if (policy.want(1)) record(t, st);
  for (long k = 1; k < K; ++k) {
    st = ci_step(st, dyn);
    if (st.k % 1000 == 0) check_covariance_floor(st);
    if (policy.want(st.k)) record(t, st);
  }
  t.final_state = std::move(st);
  return t;
}

MomentState ci_state_at(const CiDynamics& dyn, long K) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  DerivedStats init;
  init.m_eta1 = dyn.innov_mean;
  init.s_eta = dyn.innov_cov;
  MomentState st = ci_init(init);
  for (long k = 1; k < K; ++k) st = ci_step(st, dyn);
  return st;
}

MomentState ci_closed_form(const CiDynamics& dyn, long K) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  const auto n = dyn.laplacian.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  // phi[j] accumulates W(K-1) ... W(j); phi[K] = I
  std::vector<Eigen::MatrixXd> phi(static_cast<std::size_t>(K) + 1, I);
  for (long j = K - 1; j >= 1; --j) {
    const double alpha = weight_at(dyn.schedule, j);
    const Eigen::MatrixXd w = I - alpha * dyn.laplacian;
    phi[j] = phi[j + 1] * w;
  }

  MomentState st;
  st.k = K;
  st.mu = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(n, n);
  for (long j = 1; j <= K; ++j) {
    st.mu += phi[j] * dyn.innov_mean;
    sig += phi[j] * dyn.innov_cov * phi[j].transpose();
  }
  for (long j = 1; j <= K - 1; ++j) {
    const double ja = static_cast<double>(j) * weight_at(dyn.schedule, j);
    sig += ja * ja * phi[j + 1] * dyn.comm_cov * phi[j + 1].transpose();
  }
  const double Kd = static_cast<double>(K);
  st.mu /= Kd;
  sig /= Kd * Kd;
  st.sigma = 0.5 * (sig + sig.transpose());
  return st;
}

Eigen::VectorXd mu_limit(const DerivedStats& d, double b0,
                         const Eigen::MatrixXd& laplacian) {
  if (!(b0 > 0.0)) throw std::invalid_argument("mu_limit needs b0 > 0");
  const auto n = laplacian.rows();
  const Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(n, n) + b0 * laplacian;
  return m.llt().solve(d.m_eta1);
}

MdDynamics make_md_dynamics(const NetworkGraph& g, const MdParams& p,
                            const DerivedStats& d, const CommModel& c,
                            bool allow_any_tau) {
  if (!(p.a > 0.0) || !(p.b > 0.0)) {
    throw std::invalid_argument("md parameters a, b must be > 0");
  }
  if (!allow_any_tau && !(p.tau > 0.5 && p.tau < 1.0)) {
    throw std::invalid_argument("md tau must lie in (0.5, 1)");
  }
  if (d.n() != g.n || c.s_v.rows() != g.n) {
    throw std::invalid_argument("dynamics inputs have mismatched dimensions");
  }
  MdDynamics dyn;
  dyn.laplacian = g.laplacian;
  dyn.params = p;
  dyn.comm_cov = c.s_v;
  dyn.innov_cov = d.s_eta;
  dyn.innov_mean = d.m_eta1;
  return dyn;
}

MomentState md_step(const MomentState& st, const MdDynamics& dyn) {
  const double kp1 = std::pow(static_cast<double>(st.k + 1), dyn.params.tau);
  const double beta = dyn.params.b / kp1;
  const double alpha = dyn.params.a / kp1;

  MomentState out;
  out.k = st.k + 1;
  const Eigen::VectorXd wmu =
      st.mu - beta * (dyn.laplacian * st.mu) - alpha * st.mu;
  out.mu = wmu + alpha * dyn.innov_mean;

  const auto n = dyn.laplacian.rows();
  const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n) -
                            beta * dyn.laplacian -
                            alpha * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sig = w * st.sigma * w.transpose() +
                        alpha * alpha * dyn.innov_cov +
                        beta * beta * dyn.comm_cov;
  out.sigma = 0.5 * (sig + sig.transpose());
  return out;
}

MomentTrajectory md_run(const MdDynamics& dyn, long K, long record_every,
                        const std::vector<long>& marks) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  MomentState st;
  st.k = 1;
  st.mu = dyn.innov_mean;
  st.sigma = dyn.innov_cov;

  MomentTrajectory t;
  RecordPolicy policy(record_every, marks, K);
  if (policy.want(1)) record(t, st);
  for (long k = 1; k < K; ++k) {
    st = md_step(st, dyn);
    if (st.k % 1000 == 0) check_covariance_floor(st);
    if (policy.want(st.k)) record(t, st);
  }
  t.final_state = std::move(st);
  return t;
}

ScalarMoments centralized_moments(const DerivedStats& d, long k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return scalar_moments(d.ssnr, k);
}

ScalarMoments isolated_moments(const DerivedStats& d, int sensor, long k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (sensor < 0 || sensor >= d.n()) {
    throw std::invalid_argument("sensor index out of range");
  }
  return scalar_moments(d.ssnr_i(sensor), k);
}

MomentTrajectory centralized_trajectory(const DerivedStats& d, long K,
                                        long record_every,
                                        const std::vector<long>& marks) {
  return scalar_trajectory(d.ssnr, K, record_every, marks);
}

MomentTrajectory isolated_trajectory(const DerivedStats& d, int sensor, long K,
                                     long record_every,
                                     const std::vector<long>& marks) {
  if (sensor < 0 || sensor >= d.n()) {
    throw std::invalid_argument("sensor index out of range");
  }
  return scalar_trajectory(d.ssnr_i(sensor), K, record_every, marks);
}

void write_trajectory_csv(const MomentTrajectory& t, std::ostream& out) {
  out << "k,sensor,mu,sigma2\n";
  for (const auto& r : t.records) {
    for (Eigen::Index i = 0; i < r.mu.size(); ++i) {
      out << r.k << ',' << i << ',' << csv_double(r.mu(i)) << ','
          << csv_double(r.var(i)) << '\n';
    }
  }
}

MomentTrajectory read_trajectory_csv(std::istream& in) {
  CsvTable t = read_csv(in);
  const int ck = t.column("k");
  const int cs = t.column("sensor");
  const int cm = t.column("mu");
  const int cv = t.column("sigma2");
  if (ck < 0 || cs < 0 || cm < 0 || cv < 0) {
    throw std::runtime_error("trajectory csv missing columns");
  }
  MomentTrajectory out;
  TrajectoryRecord cur;
  std::vector<double> mu, var;
  long cur_k = -1;
  auto flush = [&]() {
    if (cur_k < 0) return;
    cur.k = cur_k;
    cur.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), mu.size());
    cur.var = Eigen::Map<Eigen::VectorXd>(var.data(), var.size());
    cur.trace = cur.var.sum();
    out.records.push_back(cur);
    mu.clear();
    var.clear();
  };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long k = static_cast<long>(t.integer(r, ck));
    if (k != cur_k) {
      flush();
      cur_k = k;
    }
    mu.push_back(t.num(r, cm));
    var.push_back(t.num(r, cv));
  }
  flush();
  if (!out.records.empty()) {
    const auto& last = out.records.back();
    out.final_state.k = last.k;
    out.final_state.mu = last.mu;
    out.final_state.sigma = last.var.asDiagonal();
  }
  return out;
}

std::string trajectory_sidecar_json(const MomentTrajectory& t) {
  nlohmann::json j;
  j["k"] = t.final_state.k;
  j["mu"] = std::vector<double>(t.final_state.mu.data(),
                                t.final_state.mu.data() + t.final_state.mu.size());
  std::vector<std::vector<double>> sigma;
  for (Eigen::Index i = 0; i < t.final_state.sigma.rows(); ++i) {
    sigma.emplace_back(t.final_state.sigma.row(i).begin(),
                       t.final_state.sigma.row(i).end());
  }
  j["sigma"] = sigma;
  return j.dump(2);
}

}  // namespace cidet
