#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nndm/errors.hpp"
#include "nndm/rng.hpp"
#include "nndm/student_t.hpp"

namespace nndm {

// A synthetic ground-truth density with an exact log-pdf and a seeded
// sampler, used by the benchmark and coverage harnesses.
class TestDensity {
public:
  std::string name;
  int p = 1;
  std::function<double(const Eigen::VectorXd&)> log_pdf;
  std::function<void(Rng&, Eigen::Ref<Eigen::VectorXd>)> sample;

  Eigen::MatrixXd sample_matrix(Rng& rng, Eigen::Index n) const {
    Eigen::MatrixXd out(n, p);
    Eigen::VectorXd row(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      sample(rng, row);
      out.row(i) = row.transpose();
    }
    return out;
  }
};

namespace detail {

// Equicorrelation covariance rho J + (1 - rho) I used by the MG and T cases.
inline Eigen::MatrixXd equicorrelation(int p, double rho) {
  return rho * Eigen::MatrixXd::Ones(p, p) + (1.0 - rho) * Eigen::MatrixXd::Identity(p, p);
}

inline double normal_logpdf1(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * (kLogTwoPi + z * z) - std::log(sd);
}

}  // namespace detail

// Standard Gaussian in p dimensions.
inline TestDensity density_gs(int p = 1) {
  TestDensity d;
  d.name = "gs";
  d.p = p;
  d.log_pdf = [p](const Eigen::VectorXd& x) {
    return -0.5 * (p * kLogTwoPi + x.squaredNorm());
  };
  d.sample = [](Rng& rng, Eigen::Ref<Eigen::VectorXd> out) { rng.fill_normal(out); };
  return d;
}

// Two-component Gaussian mixture 0.4 N(-2.1_p, S0) + 0.6 N(2.1_p, S0) with
// S0 the 0.8-equicorrelation matrix.
inline TestDensity density_mg(int p) {
  const Eigen::MatrixXd s0 = detail::equicorrelation(p, 0.8);
  const CholeskyFactor chol = cholesky(s0);
  const Eigen::VectorXd m1 = Eigen::VectorXd::Constant(p, -2.0);
  const Eigen::VectorXd m2 = Eigen::VectorXd::Constant(p, 2.0);
  TestDensity d;
  d.name = "mg";
  d.p = p;
  d.log_pdf = [chol, m1, m2](const Eigen::VectorXd& x) {
    detail::RunningLogSum lse;
    lse.add(std::log(0.4) + mvn_logpdf(x, m1, chol));
    lse.add(std::log(0.6) + mvn_logpdf(x, m2, chol));
    return lse.value();
  };
  d.sample = [chol, m1, m2](Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
    const bool first = rng.uniform01() < 0.4;
    Eigen::VectorXd z(out.size());
    rng.fill_normal(z);
    out = (first ? m1 : m2) + chol.L * z;
  };
  return d;
}

// Multivariate Student t with 10 degrees of freedom, location 1_p, scale S0.
inline TestDensity density_t(int p) {
  constexpr double df = 10.0;
  const Eigen::MatrixXd s0 = detail::equicorrelation(p, 0.8);
  const CholeskyFactor chol = cholesky(s0);
  const Eigen::VectorXd loc = Eigen::VectorXd::Ones(p);
  TestDensity d;
  d.name = "t";
  d.p = p;
  d.log_pdf = [chol, loc](const Eigen::VectorXd& x) { return mvt_logpdf(x, df, loc, chol); };
  d.sample = [chol, loc](Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
    Eigen::VectorXd z(out.size());
    rng.fill_normal(z);
    const double u = rng.chi_squared(df);
    out = loc + (chol.L * z) * std::sqrt(df / u);
  };
  return d;
}

// Marron-Wand claw: 0.5 N(0,1) + sum_{j=0..4} 0.1 N(j/2 - 1, 0.1^2).
inline TestDensity density_cw() {
  TestDensity d;
  d.name = "cw";
  d.p = 1;
  d.log_pdf = [](const Eigen::VectorXd& x) {
    detail::RunningLogSum lse;
    lse.add(std::log(0.5) + detail::normal_logpdf1(x[0], 0.0, 1.0));
    for (int j = 0; j <= 4; ++j)
      lse.add(std::log(0.1) + detail::normal_logpdf1(x[0], 0.5 * j - 1.0, 0.1));
    return lse.value();
  };
  d.sample = [](Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
    const double u = rng.uniform01();
    if (u < 0.5) {
      out[0] = rng.normal();
    } else {
      const int j = std::min(4, static_cast<int>((u - 0.5) / 0.1));
      out[0] = 0.5 * j - 1.0 + 0.1 * rng.normal();
    }
  };
  return d;
}

inline TestDensity make_test_density(const std::string& name, int p) {
  if (p < 1) throw invalid_parameter("test density: p must be >= 1");
  if (name == "gs") return density_gs(p);
  if (name == "mg") return density_mg(p);
  if (name == "t") return density_t(p);
  if (name == "cw") {
    if (p != 1) throw invalid_parameter("test density 'cw' is univariate only");
    return density_cw();
  }
  throw invalid_parameter("unknown test density '" + name + "'; available: gs, mg, t, cw");
}

}  // namespace nndm
