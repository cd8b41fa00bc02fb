#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/LU>

#include "nndm/dataset.hpp"
#include "nndm/errors.hpp"

namespace nndm {

// Prior shared by all neighborhoods. The inverse-Wishart scale is kept in its
// delta0sq parametrization: Psi0 = (gamma0 - p + 1) * delta0sq * I_p, which
// for p = 1 is the NIG prior sigma^2 ~ IG(gamma0/2, gamma0 delta0sq / 2).
struct Hyperparameters {
  Eigen::VectorXd mu0;
  double nu0 = 0.001;
  double gamma0 = 1.0;
  double delta0sq = 1.0;
  double alpha = 0.0;
  int k = 2;

  Eigen::Index p() const { return mu0.size(); }
  double gamma_star() const { return gamma0 - static_cast<double>(p()) + 1.0; }
  double nu_n() const { return nu0 + k; }
  double gamma_n() const { return gamma0 + k; }

  Eigen::MatrixXd psi0() const {
    return gamma_star() * delta0sq * Eigen::MatrixXd::Identity(p(), p());
  }

  void validate() const {
    if (p() < 1) throw invalid_parameter("hyperparameters: mu0 must have dimension >= 1");
    if (!mu0.allFinite()) throw invalid_parameter("hyperparameters: mu0 must be finite");
    if (!(nu0 >= 0.0)) throw invalid_parameter("hyperparameters: nu0 must be >= 0");
    if (!(gamma_star() > 0.0))
      throw invalid_parameter("hyperparameters: need gamma0 > p - 1");
    if (!(delta0sq > 0.0)) throw invalid_parameter("hyperparameters: delta0sq must be > 0");
    if (!(alpha >= 0.0)) throw invalid_parameter("hyperparameters: alpha must be >= 0");
    if (k < 2) throw invalid_parameter("hyperparameters: k must be >= 2");
  }
};

namespace detail {
inline int floor_cbrt(long long n) {
  auto r = static_cast<long long>(std::cbrt(static_cast<double>(n)));
  while ((r + 1) * (r + 1) * (r + 1) <= n) ++r;
  while (r * r * r > n) --r;
  return static_cast<int>(r);
}
}  // namespace detail

// Defaults: mu0 = 0, nu0 = 0.001, gamma0 = p (so Psi0 = delta0sq * I), and
// k = floor(n^{1/3}) + 1 for univariate data, k = 10 otherwise, capped so a
// leave-one-out fit stays possible.
inline Hyperparameters default_hyperparameters(Eigen::Index n, Eigen::Index p) {
  if (n < 3 || p < 1) throw invalid_parameter("default_hyperparameters: need n >= 3, p >= 1");
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(p);
  h.nu0 = 0.001;
  h.gamma0 = static_cast<double>(p);
  h.delta0sq = 1.0;
  h.alpha = 0.0;
  const int rule = p == 1 ? detail::floor_cbrt(n) + 1 : 10;
  h.k = std::max(2, std::min<int>(rule, static_cast<int>(n) - 1));
  return h;
}

// Bandwidth h_n^2, the common scale of Lambda_i implied by the prior alone:
//   h^2 = (nu_n + 1)(gamma0 - p + 1) delta0sq / (nu_n (gamma_n - p + 1)).
inline double bandwidth_h2(const Hyperparameters& hyper, Eigen::Index p) {
  const double df = hyper.gamma_n() - static_cast<double>(p) + 1.0;
  if (!(df > 0.0)) throw invalid_parameter("bandwidth_h2: gamma_n - p + 1 must be positive");
  const double gstar = hyper.gamma0 - static_cast<double>(p) + 1.0;
  if (!(gstar > 0.0)) throw invalid_parameter("bandwidth_h2: gamma0 - p + 1 must be positive");
  return (hyper.nu_n() + 1.0) * gstar * hyper.delta0sq / (hyper.nu_n() * df);
}

// Data-driven Dirichlet concentration. Univariate:
//   alpha = gamma0 delta0sq / (s^2 gamma_n nu_n)
// with s^2 the unbiased sample variance. Multivariate extension:
//   alpha = |H_n| / (nu_n |S|)
// with H_n = h_n^2 I_p and S the unbiased sample covariance. At p = 1 the
// multivariate rule matches the univariate formula up to the factor
// (nu_n + 1) / nu_n, which tends to 1 as k grows.
inline double choose_alpha(const Dataset& data, const Hyperparameters& hyper) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  if (n < 2) throw invalid_parameter("choose_alpha: need n >= 2");
  const Eigen::RowVectorXd mean = data.values.colwise().mean();
  const Eigen::MatrixXd centered = data.values.rowwise() - mean;
  if (p == 1) {
    const double var = centered.squaredNorm() / static_cast<double>(n - 1);
    if (!(var > 0.0)) throw degenerate_data("choose_alpha: sample variance is zero");
    return hyper.gamma0 * hyper.delta0sq / (var * hyper.gamma_n() * hyper.nu_n());
  }
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double det = cov.determinant();
  if (!(det > 0.0)) throw degenerate_data("choose_alpha: sample covariance is singular");
  const double h2 = bandwidth_h2(hyper, p);
  return std::pow(h2, static_cast<double>(p)) / (hyper.nu_n() * det);
}

}  // namespace nndm
