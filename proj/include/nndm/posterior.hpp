#pragma once

#include <Eigen/Core>

#include "nndm/errors.hpp"
#include "nndm/hyperparameters.hpp"
#include "nndm/neighbors.hpp"
#include "nndm/student_t.hpp"

namespace nndm {

// Conjugate NIW update of one neighborhood:
//   nu_n = nu0 + k, gamma_n = gamma0 + k
//   mu_i = (nu0 mu0 + k xbar_i) / nu_n
//   Psi_i = Psi0 + scatter_i + (k nu0 / nu_n) (xbar_i - mu0)(xbar_i - mu0)'
// Lambda_i = (nu_n + 1) / (nu_n (gamma_n - p + 1)) Psi_i is the scale of the
// posterior-predictive t kernel; its Cholesky factor is cached for evaluation.
struct NeighborhoodPosterior {
  Eigen::VectorXd mu;
  double nu_n = 0.0;
  double gamma_n = 0.0;
  Eigen::MatrixXd psi;
  Eigen::MatrixXd lambda;
  CholeskyFactor psi_chol;

  // Scale of sigma^2 in the p = 1 NIG parametrization: delta_i^2 = Psi_i / gamma_n.
  double delta_sq() const { return psi(0, 0) / gamma_n; }

  CholeskyFactor lambda_chol(double scale = 1.0) const {
    const double c = scale * (nu_n + 1.0) / (nu_n * (gamma_n - static_cast<double>(mu.size()) + 1.0));
    CholeskyFactor f;
    f.L = std::sqrt(c) * psi_chol.L;
    f.logdet = psi_chol.logdet + static_cast<double>(mu.size()) * std::log(c);
    return f;
  }
};

inline NeighborhoodPosterior update_neighborhood(const Neighborhood& nbhd,
                                                 const Hyperparameters& hyper) {
  hyper.validate();
  const Eigen::Index p = hyper.p();
  if (nbhd.mean.size() != p)
    throw invalid_parameter("update_neighborhood: dimension mismatch between data and prior");
  if (static_cast<int>(nbhd.members.size()) != hyper.k)
    throw invalid_parameter("update_neighborhood: neighborhood size differs from hyper.k");

  const double k = static_cast<double>(hyper.k);
  NeighborhoodPosterior post;
  post.nu_n = hyper.nu_n();
  post.gamma_n = hyper.gamma_n();
  post.mu = (hyper.nu0 * hyper.mu0 + k * nbhd.mean) / post.nu_n;
  const Eigen::VectorXd shift = nbhd.mean - hyper.mu0;
  post.psi = hyper.psi0() + nbhd.scatter + (k * hyper.nu0 / post.nu_n) * (shift * shift.transpose());
  post.psi_chol = cholesky(post.psi);
  const double c = (post.nu_n + 1.0) / (post.nu_n * (post.gamma_n - static_cast<double>(p) + 1.0));
  post.lambda = c * post.psi;
  return post;
}

// As above but from raw (mean, scatter) statistics with a precomputed Psi0,
// used by the streaming leave-one-out path where no Neighborhood object
// exists and allocations must stay out of the inner loop.
inline void update_from_stats(const Eigen::VectorXd& mean, const Eigen::MatrixXd& scatter,
                              const Hyperparameters& hyper, const Eigen::MatrixXd& psi0,
                              Eigen::VectorXd& mu_out, Eigen::MatrixXd& psi_out) {
  const double k = static_cast<double>(hyper.k);
  const double nu_n = hyper.nu_n();
  mu_out = (hyper.nu0 * hyper.mu0 + k * mean) / nu_n;
  const Eigen::VectorXd shift = mean - hyper.mu0;
  psi_out = psi0 + scatter;
  psi_out.selfadjointView<Eigen::Lower>().rankUpdate(shift, k * hyper.nu0 / nu_n);
  psi_out = psi_out.selfadjointView<Eigen::Lower>();
}

}  // namespace nndm
