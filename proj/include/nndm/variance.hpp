#pragma once

#include <cmath>

#include <Eigen/Core>

#include "nndm/errors.hpp"
#include "nndm/hyperparameters.hpp"
#include "nndm/model.hpp"
#include "nndm/student_t.hpp"

namespace nndm {

// Upper bound on the pseudo-posterior variance of f(x):
//   var{f(x) | data} <= R_n D_n^{-p/2} fvar(x) |H_n|^{-1/2}
//                       * [ 1/(n(alpha+1)+1) + 1/n ]
// where fvar is the mixture of t kernels with df gamma_n - p + 2 and scales
// B_i = D_n Lambda_i.
struct VarianceDiagnostics {
  double r_n = 0.0;
  double d_n = 0.0;
  double fhat_var_at_x = 0.0;
  double bound_at_x = 0.0;
};

inline VarianceDiagnostics variance_bound(const FittedModel& model, const Eigen::VectorXd& x) {
  const auto p = static_cast<double>(model.p());
  const double nu_n = model.hyper().nu_n();
  const double gamma_n = model.hyper().gamma_n();
  const double df_var = gamma_n - p + 2.0;
  if (!(df_var > 0.0)) throw invalid_parameter("variance_bound: gamma_n - p + 2 must be positive");

  VarianceDiagnostics diag;
  // Gamma ratio in log space; gamma_n grows with k and overflows Gamma() fast.
  diag.r_n = std::exp(std::lgamma(0.5 * df_var) - std::lgamma(0.5 * (df_var - 1.0)) +
                      0.5 * p * (std::log(nu_n + 2.0) -
                                 std::log(4.0 * kPi * nu_n * df_var)));
  diag.d_n = (gamma_n - p + 1.0) * (nu_n + 2.0) / (2.0 * df_var * (nu_n + 1.0));

  detail::RunningLogSum lse;
  for (const NeighborhoodPosterior& post : model.posteriors())
    lse.add(mvt_logpdf(x, df_var, post.mu, post.lambda_chol(diag.d_n)));
  diag.fhat_var_at_x = std::exp(lse.value()) / static_cast<double>(model.n());

  const double h2 = bandwidth_h2(model.hyper(), model.p());
  const double det_h = std::pow(h2, p);
  const auto n = static_cast<double>(model.n());
  const double alpha = model.hyper().alpha;
  diag.bound_at_x = diag.r_n * std::pow(diag.d_n, -0.5 * p) * diag.fhat_var_at_x /
                    std::sqrt(det_h) * (1.0 / (n * (alpha + 1.0) + 1.0) + 1.0 / n);
  return diag;
}

// Pseudo-posterior variance of sqrt(n) * Theta with Theta = sum_i pi_i eta_i
// (the mean functional of the mixture), univariate closed form:
//   vbar + (n S_mu^2 + (n-1) vbar) / (n(alpha+1)+1)
// with v_i = gamma_n lambda_i^2 / ((nu_n+1)(gamma_n-2)), lambda_i^2 = Lambda_i.
inline double functional_variance(const FittedModel& model) {
  if (model.p() != 1)
    throw unsupported("functional_variance: only defined for univariate models");
  const double nu_n = model.hyper().nu_n();
  const double gamma_n = model.hyper().gamma_n();
  if (!(gamma_n > 2.0)) throw invalid_parameter("functional_variance: need gamma_n > 2");

  const auto n = static_cast<double>(model.n());
  double v_bar = 0.0;
  double mu_bar = 0.0;
  for (const NeighborhoodPosterior& post : model.posteriors()) {
    v_bar += gamma_n * post.lambda(0, 0) / ((nu_n + 1.0) * (gamma_n - 2.0));
    mu_bar += post.mu[0];
  }
  v_bar /= n;
  mu_bar /= n;
  double s_mu_sq = 0.0;
  for (const NeighborhoodPosterior& post : model.posteriors()) {
    const double d = post.mu[0] - mu_bar;
    s_mu_sq += d * d;
  }
  s_mu_sq /= n;

  const double alpha = model.hyper().alpha;
  return v_bar + (n * s_mu_sq + (n - 1.0) * v_bar) / (n * (alpha + 1.0) + 1.0);
}

}  // namespace nndm
