#include "cidet/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace cidet {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kSqrt3 = 1.7320508075688772;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

namespace rng {

std::uint64_t Stream::next() {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

double Stream::u01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Stream::u01_open() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t derive(std::uint64_t master, std::uint64_t trial, std::uint64_t k,
                     std::uint64_t channel) {
  std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ trial);
  h = mix64(h ^ k);
  h = mix64(h ^ channel);
  return h;
}

}  // namespace rng

void standardized_draws(NoiseFamily family, rng::Stream& s, double* out, int n) {
  switch (family) {
    case NoiseFamily::gaussian:
      for (int i = 0; i < n; i += 2) {
        // Box-Muller with u1 in (0, 1]
        const double u1 =
            (static_cast<double>(s.next() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = s.u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = r * std::cos(kTwoPi * u2);
        if (i + 1 < n) out[i + 1] = r * std::sin(kTwoPi * u2);
      }
      break;
    case NoiseFamily::laplace:
      for (int i = 0; i < n; ++i) {
        const double u = s.u01_open();
        const double x = u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
        out[i] = x * kInvSqrt2;  // unit variance
      }
      break;
    case NoiseFamily::uniform:
      for (int i = 0; i < n; ++i) {
        out[i] = (2.0 * s.u01() - 1.0) * kSqrt3;  // unit variance
      }
      break;
  }
}

NoiseSpec make_noise_spec(NoiseFamily family, const Eigen::MatrixXd& covariance) {
  const auto n = covariance.rows();
  if (covariance.cols() != n || n == 0) {
    throw std::invalid_argument("noise covariance must be square");
  }
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("noise covariance is not symmetric");
  }

  NoiseSpec spec;
  spec.family = family;
  spec.covariance = covariance;

  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() == Eigen::Success) {
    spec.mixing = llt.matrixL();
  } else {
    // semidefinite: eigenvalue square root
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
    if (es.info() != Eigen::Success) {
      throw NumericalError("noise covariance eigendecomposition failed");
    }
    if (es.eigenvalues()(0) < -1e-10 * scale) {
      throw std::invalid_argument("noise covariance is not positive semidefinite");
    }
    spec.mixing = es.eigenvectors() *
                  es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  if ((spec.mixing * spec.mixing.transpose() - covariance).cwiseAbs().maxCoeff() >
      1e-9 * scale) {
    throw NumericalError("mixing factor does not reproduce the covariance");
  }
  return spec;
}

Eigen::VectorXd noise_draw(const NoiseSpec& spec, std::uint64_t master,
                           std::uint64_t trial, long k, std::uint64_t channel) {
  const int n = static_cast<int>(spec.covariance.rows());
  rng::Stream s{rng::derive(master, trial, static_cast<std::uint64_t>(k), channel)};
  Eigen::VectorXd w(n);
  standardized_draws(spec.family, s, w.data(), n);
  return spec.mixing * w;
}

SimProblem make_sim_problem(const NetworkGraph& g, const LaplacianSpectrum& s,
                            const WeightSchedule& sched, const DerivedStats& d,
                            const CommModel& c, const MdParams& md,
                            const NoiseSpec& sensing, const NoiseSpec& comm) {
  if (d.n() != g.n) throw std::invalid_argument("model/graph dimension mismatch");
  const double se_scale = std::max(1.0, d.s_eta.cwiseAbs().maxCoeff());
  if ((sensing.covariance - d.s_eta).cwiseAbs().maxCoeff() > 1e-9 * se_scale) {
    throw std::invalid_argument(
        "sensing noise covariance does not match the innovation covariance");
  }
  const double sv_scale = std::max(1.0, c.s_v.cwiseAbs().maxCoeff());
  if ((comm.covariance - c.s_v).cwiseAbs().maxCoeff() > 1e-9 * sv_scale) {
    throw std::invalid_argument(
        "communication noise covariance does not match the model");
  }
  if (sensing.family != NoiseFamily::gaussian) {
    // non-Gaussian sensing is supported only spatially independent
    for (Eigen::Index i = 0; i < d.s_eta.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.s_eta.cols(); ++j) {
        if (i != j && std::abs(d.s_eta(i, j)) > 1e-12 * se_scale) {
          throw std::invalid_argument(
              "non-Gaussian sensing noise requires a diagonal covariance");
        }
      }
    }
  }

  SimProblem p;
  p.laplacian = g.laplacian;
  p.lambda_n = s.lambda_n();
  p.schedule = sched;
  p.md = md;
  p.innov_mean = d.m_eta1;
  p.ssnr_i = d.ssnr_i;
  p.sensing = sensing;
  p.comm = comm;
  p.n = g.n;
  return p;
}

int SimRun::checkpoint_index(long k) const {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i].k == k) return static_cast<int>(i);
  }
  return -1;
}

Eigen::VectorXd SimRun::mean(int checkpoint) const {
  const auto& c = checkpoints.at(checkpoint);
  return c.sum_x / static_cast<double>(trials);
}

Eigen::MatrixXd SimRun::covariance(int checkpoint) const {
  const auto& c = checkpoints.at(checkpoint);
  if (trials < 2) throw std::invalid_argument("covariance needs >= 2 trials");
  const double m = static_cast<double>(trials);
  const Eigen::VectorXd mu = c.sum_x / m;
  Eigen::MatrixXd cov = (c.sum_xx - m * (mu * mu.transpose())) / (m - 1.0);
  return 0.5 * (cov + cov.transpose());
}

double SimRun::error_rate(int checkpoint, int column) const {
  const auto& c = checkpoints.at(checkpoint);
  return static_cast<double>(c.errors(column)) / static_cast<double>(trials);
}

int worker_count(int max_threads) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (max_threads > 0) return std::min(max_threads, hw);
  if (const char* env = std::getenv("CIDET_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) return std::min(cap, hw);
  }
  return hw;
}

namespace {

struct Partial {
  std::vector<CheckpointStats> cp;
};

// Per-trial state walker shared by every dynamics kind.
class TrialRunner {
 public:
  TrialRunner(const SimProblem& p, const SimRequest& req)
      : p_(p),
        req_(req),
        sign_(req.hypothesis == Hypothesis::h1 ? 1.0 : -1.0),
        cols_(req.dynamics == Dynamics::ci || req.dynamics == Dynamics::md
                  ? p.n
                  : 1),
        x_(cols_),
        eta_(p.n),
        noise_(p.n),
        w_(p.n),
        lx_(p.n) {}

  int columns() const { return cols_; }

  void run(std::uint64_t trial, std::vector<CheckpointStats>& acc) {
    draw_eta(trial, 1);
    switch (req_.dynamics) {
      case Dynamics::ci:
      case Dynamics::md:
        x_ = eta_;
        break;
      case Dynamics::centralized:
        x_(0) = eta_.sum();
        break;
      case Dynamics::isolated:
        x_(0) = isolated_stat();
        break;
    }
    std::size_t next_cp = 0;
    maybe_accumulate(1, next_cp, acc);
    for (long k = 1; k < req_.iters && next_cp < acc.size(); ++k) {
      step(trial, k);
      maybe_accumulate(k + 1, next_cp, acc);
    }
  }

 private:
  void draw_eta(std::uint64_t trial, long k) {
    rng::Stream s{rng::derive(req_.master_seed, trial,
                              static_cast<std::uint64_t>(k), rng::kChannelSensing)};
    standardized_draws(p_.sensing.family, s, w_.data(), p_.n);
    if (req_.dynamics == Dynamics::isolated) return;  // uses w_ directly
    eta_.noalias() = p_.sensing.mixing * w_;
    eta_ += sign_ * p_.innov_mean;
  }

  void draw_comm(std::uint64_t trial, long k) {
    rng::Stream s{rng::derive(req_.master_seed, trial,
                              static_cast<std::uint64_t>(k), rng::kChannelComm)};
    standardized_draws(p_.comm.family, s, w_.data(), p_.n);
    noise_.noalias() = p_.comm.mixing * w_;
  }

  double isolated_stat() const {
    const double snr = p_.ssnr_i(req_.sensor);
    return sign_ * snr / 2.0 + std::sqrt(snr) * w_(req_.sensor);
  }

  void step(std::uint64_t trial, long k) {
    const double kd = static_cast<double>(k);
    switch (req_.dynamics) {
      case Dynamics::ci: {
        const double alpha = weight_at(p_.schedule, k);
        const double c = kd / (kd + 1.0);
        draw_comm(trial, k);
        draw_eta(trial, k + 1);
        lx_.noalias() = p_.laplacian * x_;
        x_ = c * (x_ - alpha * lx_ + alpha * noise_) + eta_ / (kd + 1.0);
        break;
      }
      case Dynamics::md: {
        const double denom = std::pow(kd + 1.0, p_.md.tau);
        const double beta = p_.md.b / denom;
        const double alpha = p_.md.a / denom;
        draw_comm(trial, k);
        draw_eta(trial, k + 1);  // fresh innovation each round
        lx_.noalias() = p_.laplacian * x_;
        x_ = x_ - beta * lx_ - alpha * x_ + beta * noise_ + alpha * eta_;
        break;
      }
      case Dynamics::centralized: {
        draw_eta(trial, k + 1);
        x_(0) = (kd * x_(0) + eta_.sum()) / (kd + 1.0);
        break;
      }
      case Dynamics::isolated: {
        draw_eta(trial, k + 1);
        x_(0) = (kd * x_(0) + isolated_stat()) / (kd + 1.0);
        break;
      }
    }
  }

  void maybe_accumulate(long k, std::size_t& next_cp,
                        std::vector<CheckpointStats>& acc) {
    if (next_cp >= acc.size() || acc[next_cp].k != k) return;
    auto& cp = acc[next_cp];
    for (int i = 0; i < cols_; ++i) {
      const bool error = req_.hypothesis == Hypothesis::h1 ? x_(i) <= 0.0
                                                           : x_(i) > 0.0;
      if (error) cp.errors(i) += 1;
    }
    cp.sum_x += x_;
    cp.sum_xx.noalias() += x_ * x_.transpose();
    ++next_cp;
  }

  const SimProblem& p_;
  const SimRequest& req_;
  double sign_;
  int cols_;
  Eigen::VectorXd x_, eta_, noise_, w_, lx_;
};

std::vector<CheckpointStats> empty_checkpoints(const std::vector<long>& ks, int cols) {
  std::vector<CheckpointStats> out;
  out.reserve(ks.size());
  for (long k : ks) {
    CheckpointStats c;
    c.k = k;
    c.errors = Eigen::VectorXi::Zero(cols);
    c.sum_x = Eigen::VectorXd::Zero(cols);
    c.sum_xx = Eigen::MatrixXd::Zero(cols, cols);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

SimRun simulate(const SimProblem& p, const SimRequest& req) {
  if (req.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (req.iters < 1) throw std::invalid_argument("iters must be >= 1");
  if (req.dynamics == Dynamics::isolated &&
      (req.sensor < 0 || req.sensor >= p.n)) {
    throw std::invalid_argument("isolated sensor index out of range");
  }
  if (req.dynamics == Dynamics::md &&
      !(p.md.tau > 0.5 && p.md.tau < 1.0)) {
    throw std::invalid_argument("md tau must lie in (0.5, 1)");
  }
  std::vector<long> cps = req.checkpoints;
  if (cps.empty()) cps.push_back(req.iters);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  for (long k : cps) {
    if (k < 1 || k > req.iters) {
      throw std::invalid_argument("checkpoint outside [1, iters]");
    }
  }
  if (req.dynamics == Dynamics::ci) {
    // weights never increase, so checking the first one covers every k
    if (weight_at(p.schedule, 1) * p.lambda_n > 2.0) {
      throw NumericalError("inadmissible schedule: alpha_1 * lambda_n > 2");
    }
  }

  const int cols = (req.dynamics == Dynamics::ci || req.dynamics == Dynamics::md)
                       ? p.n
                       : 1;

  // fixed-size trial chunks; partials are reduced in chunk order so the
  // result does not depend on the worker count
  constexpr long kChunk = 64;
  const long nchunks = (req.trials + kChunk - 1) / kChunk;
  std::vector<Partial> partials(static_cast<std::size_t>(nchunks));

  const int workers =
      static_cast<int>(std::min<long>(worker_count(req.max_threads), nchunks));
  std::atomic<long> next_chunk{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;

  auto body = [&]() {
    TrialRunner runner(p, req);
    try {
      long c;
      while ((c = next_chunk.fetch_add(1)) < nchunks && !failed.load()) {
        auto& partial = partials[static_cast<std::size_t>(c)];
        partial.cp = empty_checkpoints(cps, cols);
        const long lo = c * kChunk;
        const long hi = std::min(req.trials, lo + kChunk);
        for (long t = lo; t < hi; ++t) {
          runner.run(static_cast<std::uint64_t>(t), partial.cp);
        }
      }
    } catch (const std::exception& e) {
      failed.store(true);
      std::lock_guard<std::mutex> lock(error_mutex);
      if (error_message.empty()) error_message = e.what();
    }
  };

  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw NumericalError(error_message);

  SimRun run;
  run.hypothesis = req.hypothesis;
  run.trials = req.trials;
  if (req.dynamics == Dynamics::isolated) {
    run.sensor_ids = {req.sensor};
  } else if (req.dynamics == Dynamics::centralized) {
    run.sensor_ids = {0};
  } else {
    for (int i = 0; i < cols; ++i) run.sensor_ids.push_back(i);
  }
  run.checkpoints = empty_checkpoints(cps, cols);
  for (const auto& partial : partials) {
    for (std::size_t i = 0; i < run.checkpoints.size(); ++i) {
      run.checkpoints[i].errors += partial.cp[i].errors;
      run.checkpoints[i].sum_x += partial.cp[i].sum_x;
      run.checkpoints[i].sum_xx += partial.cp[i].sum_xx;
    }
  }
  return run;
}

namespace {

// 95% Wilson interval
std::pair<double, double> wilson(double count, double n) {
  constexpr double z = 1.959963984540054;
  const double p = count / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace

std::vector<RateEstimate> empirical_rate(const SimRun& h1, const SimRun& h0,
                                         long k) {
  const int i1 = h1.checkpoint_index(k);
  const int i0 = h0.checkpoint_index(k);
  if (i1 < 0 || i0 < 0) throw std::invalid_argument("checkpoint not recorded");
  if (h1.trials != h0.trials ||
      h1.sensor_ids.size() != h0.sensor_ids.size()) {
    throw std::invalid_argument("runs are not comparable");
  }
  const double kd = static_cast<double>(k);
  const double n = 2.0 * static_cast<double>(h1.trials);

  std::vector<RateEstimate> out;
  for (std::size_t c = 0; c < h1.sensor_ids.size(); ++c) {
    RateEstimate e;
    const double count = h1.checkpoints[i1].errors(c) + h0.checkpoints[i0].errors(c);
    e.p_hat = count / n;
    if (count < 1.0) {
      // no errors observed: probability below 1/n, not zero
      e.below_resolution = true;
      e.rate = -std::log(1.0 / n) / kd;
      e.lo = 0.0;
      e.hi = std::numeric_limits<double>::infinity();
    } else {
      e.rate = -std::log(e.p_hat) / kd;
      auto [plo, phi] = wilson(count, n);
      e.lo = phi >= 1.0 ? 0.0 : -std::log(phi) / kd;
      e.hi = plo <= 0.0 ? std::numeric_limits<double>::infinity()
                        : -std::log(plo) / kd;
    }
    out.push_back(e);
  }
  return out;
}

DsnrGrowthReport dsnr_growth(const SimRun& run, double reference_rate) {
  if (run.checkpoints.empty()) throw std::invalid_argument("run has no checkpoints");
  const int sensors = static_cast<int>(run.sensor_ids.size());
  const int cks = static_cast<int>(run.checkpoints.size());

  DsnrGrowthReport rep;
  rep.checkpoints.reserve(cks);
  for (const auto& c : run.checkpoints) rep.checkpoints.push_back(c.k);
  rep.dsnr.resize(cks, sensors);
  rep.dsnr_over_k.resize(cks, sensors);
  rep.reference_rate = reference_rate;

  for (int c = 0; c < cks; ++c) {
    const Eigen::VectorXd mean = run.mean(c);
    const Eigen::MatrixXd cov = run.covariance(c);
    for (int s = 0; s < sensors; ++s) {
      const double var = cov(s, s);
      if (!(var > 0.0)) {
        throw NumericalError("degenerate variance estimate in growth report");
      }
      rep.dsnr(c, s) = mean(s) * mean(s) / var;
      rep.dsnr_over_k(c, s) =
          rep.dsnr(c, s) / static_cast<double>(run.checkpoints[c].k);
    }
  }

  rep.slope.resize(sensors);
  rep.band_ratio.resize(sensors);
  const long K = rep.checkpoints.back();
  for (int s = 0; s < sensors; ++s) {
    double num = 0.0, den = 0.0;
    for (int c = 0; c < cks; ++c) {
      const double kd = static_cast<double>(run.checkpoints[c].k);
      if (run.checkpoints[c].k * 10 < K) continue;  // last decade only
      num += rep.dsnr(c, s) * kd;
      den += kd * kd;
    }
    rep.slope(s) = den > 0.0 ? num / den : 0.0;
    rep.band_ratio(s) =
        rep.dsnr_over_k.col(s).maxCoeff() / rep.dsnr_over_k.col(s).minCoeff();
  }
  return rep;
}

DsnrGrowthReport dsnr_growth(const SimProblem& p, Dynamics dynamics, long trials,
                             const std::vector<long>& checkpoints,
                             std::uint64_t master_seed, double reference_rate) {
  if (checkpoints.empty()) throw std::invalid_argument("no checkpoints");
  SimRequest req;
  req.dynamics = dynamics;
  req.hypothesis = Hypothesis::h1;
  req.trials = trials;
  req.checkpoints = checkpoints;
  std::vector<long> sorted = checkpoints;
  std::sort(sorted.begin(), sorted.end());
  req.iters = sorted.back();
  req.master_seed = master_seed;
  return dsnr_growth(simulate(p, req), reference_rate);
}

}  // namespace cidet
