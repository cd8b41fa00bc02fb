#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nndm/errors.hpp"

namespace nndm {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;
inline constexpr double kLogPi = 1.1447298858494001741434273513530587;

// Lower Cholesky factor plus the log-determinant of the factored matrix.
struct CholeskyFactor {
  Eigen::MatrixXd L;
  double logdet = 0.0;
};

inline CholeskyFactor cholesky(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw numerical_error("cholesky: matrix is not positive definite");
  CholeskyFactor f;
  f.L = llt.matrixL();
  f.logdet = 2.0 * f.L.diagonal().array().log().sum();
  return f;
}

// Squared Mahalanobis distance ||L^{-1} (x - mu)||^2.
inline double mahalanobis_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                             const CholeskyFactor& f) {
  return f.L.triangularView<Eigen::Lower>().solve(x - mu).squaredNorm();
}

// Log density of the p-dimensional Student t with df > 0, location mu and
// scale matrix Lambda = L L^T:
//   t_df(x; mu, Lambda) = Gamma((df+p)/2)/Gamma(df/2) (df pi)^{-p/2}
//                         |Lambda|^{-1/2} [1 + (x-mu)' (df Lambda)^{-1} (x-mu)]^{-(df+p)/2}
inline double mvt_logpdf(const Eigen::VectorXd& x, double df, const Eigen::VectorXd& mu,
                         const CholeskyFactor& scale) {
  if (!(df > 0.0)) throw invalid_parameter("mvt_logpdf: df must be positive");
  const auto p = static_cast<double>(x.size());
  const double quad = mahalanobis_sq(x, mu, scale);
  return std::lgamma(0.5 * (df + p)) - std::lgamma(0.5 * df) - 0.5 * p * (std::log(df) + kLogPi) -
         0.5 * scale.logdet - 0.5 * (df + p) * std::log1p(quad / df);
}

inline double mvt_logpdf(const Eigen::VectorXd& x, double df, const Eigen::VectorXd& mu,
                         const Eigen::MatrixXd& scale_matrix) {
  return mvt_logpdf(x, df, mu, cholesky(scale_matrix));
}

// Log density of N_p(eta, Sigma) with Sigma = L L^T.
inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& eta,
                         const CholeskyFactor& cov) {
  const auto p = static_cast<double>(x.size());
  return -0.5 * (p * kLogTwoPi + cov.logdet + mahalanobis_sq(x, eta, cov));
}

inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& eta,
                         const Eigen::MatrixXd& cov_matrix) {
  return mvn_logpdf(x, eta, cholesky(cov_matrix));
}

// Standardized univariate Student t density, log scale.
inline double t1_logpdf(double z, double df) {
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * (std::log(df) + kLogPi) -
         0.5 * (df + 1.0) * std::log1p(z * z / df);
}

namespace detail {

// Streaming log-sum-exp accumulator.
class RunningLogSum {
public:
  void add(double lw) {
    // a zero-probability term leaves the sum unchanged (and would otherwise
    // produce exp(-inf - -inf) = NaN before the first finite term)
    if (lw == -std::numeric_limits<double>::infinity()) return;
    if (lw <= max_) {
      sum_ += std::exp(lw - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - lw) + 1.0;
      max_ = lw;
    }
  }
  double value() const {
    return sum_ > 0.0 ? max_ + std::log(sum_) : -std::numeric_limits<double>::infinity();
  }

private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

// Mixture components packed into flat arrays for repeated evaluation:
// locations row-major, lower-triangular factors in packed row order
// (L00, L10, L11, L20, ...). `log_norm` carries everything constant per
// component, so one evaluation is a forward substitution plus a log1p/exp.
struct PackedMixture {
  int p = 0;
  int count = 0;
  std::vector<double> loc;       // count x p
  std::vector<double> factor;    // count x p(p+1)/2, unit of the scale matrix
  std::vector<double> log_norm;  // per-component additive constant
  double df = 0.0;               // > 0: Student t in (scaled) form; 0: Gaussian

  static int packed_size(int p) { return p * (p + 1) / 2; }

  // Solve L y = x - loc_c in place of `work`, return ||y||^2.
  double quad_form(int c, const double* x, double* work) const {
    const double* m = loc.data() + static_cast<std::size_t>(c) * p;
    const double* f = factor.data() + static_cast<std::size_t>(c) * packed_size(p);
    double quad = 0.0;
    int idx = 0;
    for (int r = 0; r < p; ++r) {
      double s = x[r] - m[r];
      for (int cidx = 0; cidx < r; ++cidx) s -= f[idx + cidx] * work[cidx];
      idx += r;
      const double y = s / f[idx];
      ++idx;
      work[r] = y;
      quad += y * y;
    }
    return quad;
  }

  // Log of component c's weighted density at x.
  double component_logpdf(int c, const double* x, double* work) const {
    const double quad = quad_form(c, x, work);
    if (df > 0.0) return log_norm[c] - 0.5 * (df + p) * std::log1p(quad / df);
    return log_norm[c] - 0.5 * quad;
  }

  // log sum over components of the weighted densities at x.
  double logpdf(const double* x, double* work) const {
    double max_lw = -std::numeric_limits<double>::infinity();
    double* lw = work + p;
    for (int c = 0; c < count; ++c) {
      lw[c] = component_logpdf(c, x, work);
      if (lw[c] > max_lw) max_lw = lw[c];
    }
    if (!std::isfinite(max_lw)) return max_lw;
    double s = 0.0;
    for (int c = 0; c < count; ++c) s += std::exp(lw[c] - max_lw);
    return max_lw + std::log(s);
  }

  // scratch vector sized for quad_form work plus the component log weights
  std::vector<double> make_workspace() const {
    return std::vector<double>(static_cast<std::size_t>(p) + count);
  }
};

}  // namespace detail

}  // namespace nndm
