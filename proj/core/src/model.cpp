#include "cidet/model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cidet {

namespace {

using json = nlohmann::json;

void check_symmetric(const Eigen::MatrixXd& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(name) + " is not symmetric");
  }
}

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge");
  }
  return es.eigenvalues();
}

void validate_sensing(const SensingModel& m) {
  const auto n = m.m0.size();
  if (n == 0 || m.m1.size() != n || m.s_zeta.rows() != n || m.s_zeta.cols() != n) {
    throw std::invalid_argument("sensing model dimensions disagree");
  }
  check_symmetric(m.s_zeta, "s_zeta");
}

Eigen::MatrixXd parse_matrix(const json& j, Eigen::Index n, const char* name) {
  if (j.is_object()) {
    if (!j.contains("scaled_identity")) {
      throw ConfigError(std::string(name) + ": expected scaled_identity or matrix");
    }
    return j["scaled_identity"].get<double>() *
           Eigen::MatrixXd::Identity(n, n).eval();
  }
  if (!j.is_array()) throw ConfigError(std::string(name) + ": expected array");
  Eigen::MatrixXd m(n, n);
  if (!j.empty() && j[0].is_array()) {  // nested rows
    if (static_cast<Eigen::Index>(j.size()) != n) {
      throw ConfigError(std::string(name) + ": wrong row count");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(j[i].size()) != n) {
        throw ConfigError(std::string(name) + ": wrong column count");
      }
      for (Eigen::Index k = 0; k < n; ++k) m(i, k) = j[i][k].get<double>();
    }
  } else {  // flat row-major
    if (static_cast<Eigen::Index>(j.size()) != n * n) {
      throw ConfigError(std::string(name) + ": expected n*n values");
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) m(i, k) = j[i * n + k].get<double>();
  }
  return m;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::MatrixXd> innovation_stats(const SensingModel& m) {
  validate_sensing(m);
  const Eigen::VectorXd evals = sym_eigenvalues(m.s_zeta);
  if (evals(0) <= 0.0) {
    throw std::invalid_argument("s_zeta is not positive definite");
  }
  if (evals(evals.size() - 1) / evals(0) > 1e12) {
    throw NumericalError("s_zeta numerically singular (condition > 1e12)");
  }
  const Eigen::VectorXd d = m.m1 - m.m0;
  const Eigen::VectorXd h = m.s_zeta.llt().solve(d);
  Eigen::VectorXd mean = 0.5 * h.cwiseProduct(d);
  Eigen::MatrixXd cov = m.s_zeta.cwiseProduct(h * h.transpose());
  cov = 0.5 * (cov + cov.transpose());
  return {std::move(mean), std::move(cov)};
}

DerivedStats snr_stats(const SensingModel& m, const CommModel& c) {
  DerivedStats d;
  auto [mean, cov] = innovation_stats(m);
  d.m_eta1 = std::move(mean);
  d.s_eta = std::move(cov);

  const auto n = m.m0.size();
  if (c.s_v.rows() != n || c.s_v.cols() != n) {
    throw std::invalid_argument("s_v dimension disagrees with the model");
  }
  check_symmetric(c.s_v, "s_v");
  const Eigen::VectorXd sv_evals = sym_eigenvalues(c.s_v);
  if (sv_evals(0) < -1e-12) {
    throw std::invalid_argument("s_v is not positive semidefinite");
  }

  const Eigen::VectorXd diff = m.m1 - m.m0;
  d.ssnr = std::max(0.0, diff.dot(m.s_zeta.llt().solve(diff)));
  d.ssnr_i.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.ssnr_i(i) = diff(i) * diff(i) / m.s_zeta(i, i);
  }
  d.s_v_norm = std::max(std::abs(sv_evals(0)), std::abs(sv_evals(sv_evals.size() - 1)));
  d.s_v_lambda_min = sv_evals(0);

  const double per_sensor = d.ssnr / static_cast<double>(n);
  if (d.s_v_norm > 0.0) {
    d.csnr = per_sensor * per_sensor / d.s_v_norm;
    d.g_c = per_sensor / d.s_v_norm;
  } else {
    const double inf = std::numeric_limits<double>::infinity();
    d.csnr = d.ssnr > 0.0 ? inf : 0.0;
    d.g_c = d.ssnr > 0.0 ? inf : 0.0;
  }
  if (d.ssnr > 0.0) {
    d.c_mu = 2.0 * std::sqrt(double(n)) * d.m_eta1.norm() / per_sensor;
    const Eigen::VectorXd se = sym_eigenvalues(d.s_eta);
    d.c_sigma = std::max(std::abs(se(0)), std::abs(se(se.size() - 1))) / per_sensor;
  } else {
    // globally undetectable signal: constants undefined
    d.c_mu = std::numeric_limits<double>::quiet_NaN();
    d.c_sigma = std::numeric_limits<double>::quiet_NaN();
  }
  d.chernoff_total = d.ssnr / 8.0;
  d.chernoff_i = d.ssnr_i / 8.0;
  return d;
}

Detectability detectability(const DerivedStats& d) {
  Detectability out;
  const double tol = 1e-12 * std::max(1.0, d.ssnr);
  out.global = d.ssnr > tol;
  out.local.resize(d.ssnr_i.size());
  for (Eigen::Index i = 0; i < d.ssnr_i.size(); ++i) {
    out.local[i] = d.ssnr_i(i) > tol;
  }
  return out;
}

Checklist validate_assumptions(const SensingModel& m, const CommModel& c,
                               const LaplacianSpectrum& s) {
  validate_sensing(m);
  if (c.s_v.rows() != m.m0.size() || c.s_v.cols() != m.m0.size()) {
    throw std::invalid_argument("s_v dimension disagrees with the model");
  }
  check_symmetric(c.s_v, "s_v");

  Checklist cl;
  const Eigen::VectorXd sz = sym_eigenvalues(m.s_zeta);
  const Eigen::VectorXd sv = sym_eigenvalues(c.s_v);
  {
    CheckItem it;
    it.name = "noise_positive_definite";
    it.value = std::min(sz(0), sv(0));
    it.pass = sz(0) > 0.0 && sv(0) > 0.0;
    if (!it.pass) {
      it.detail = sz(0) <= 0.0 ? "lambda_1(s_zeta) <= 0" : "lambda_1(s_v) <= 0";
    }
    cl.items.push_back(std::move(it));
  }
  {
    CheckItem it;
    it.name = "network_connected";
    it.value = s.lambda2();
    it.pass = is_connected(s);
    if (!it.pass) it.detail = "lambda_2 = 0 (disconnected)";
    cl.items.push_back(std::move(it));
  }

  const bool derivable = sz(0) > 0.0 && sv(0) >= -1e-12 &&
                         sz(sz.size() - 1) / sz(0) <= 1e12;
  if (derivable) {
    const DerivedStats d = snr_stats(m, c);
    {
      CheckItem it;
      it.name = "globally_detectable";
      it.value = d.ssnr;
      it.pass = d.ssnr > 1e-12 * std::max(1.0, d.ssnr);
      if (!it.pass) it.detail = "ssnr = 0 (identical means)";
      cl.items.push_back(std::move(it));
    }
    {
      CheckItem it;
      it.name = "equal_local_snr";
      const double lo = d.ssnr_i.minCoeff();
      const double hi = d.ssnr_i.maxCoeff();
      it.value = hi - lo;
      it.pass = lo > 0.0 && (hi - lo) <= 1e-9 * std::max(1.0, hi);
      if (!it.pass) {
        it.detail = lo <= 0.0 ? "a sensor has zero local snr"
                              : "local snr values differ";
      }
      cl.items.push_back(std::move(it));
    }
  } else {
    for (const char* name : {"globally_detectable", "equal_local_snr"}) {
      CheckItem it;
      it.name = name;
      it.pass = false;
      it.detail = "not derivable: sensing covariance unusable";
      cl.items.push_back(std::move(it));
    }
  }
  return cl;
}

std::pair<SensingModel, CommModel> parse_model(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model json: ") + e.what());
  }
  for (const char* key : {"m0", "m1", "s_zeta", "s_v"}) {
    if (!j.contains(key)) {
      throw ConfigError(std::string("model json missing key ") + key);
    }
  }
  SensingModel m;
  const auto& jm0 = j["m0"];
  const auto& jm1 = j["m1"];
  if (!jm0.is_array() || !jm1.is_array() || jm0.size() != jm1.size() || jm0.empty()) {
    throw ConfigError("m0/m1 must be equal-length arrays");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(jm0.size());
  m.m0.resize(n);
  m.m1.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.m0(i) = jm0[i].get<double>();
    m.m1(i) = jm1[i].get<double>();
  }
  m.s_zeta = parse_matrix(j["s_zeta"], n, "s_zeta");
  CommModel c;
  c.s_v = parse_matrix(j["s_v"], n, "s_v");
  return {std::move(m), std::move(c)};
}

std::pair<SensingModel, CommModel> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace cidet
