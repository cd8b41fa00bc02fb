#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nndm/errors.hpp"
#include "nndm/model.hpp"
#include "nndm/parallel.hpp"
#include "nndm/rng.hpp"
#include "nndm/student_t.hpp"

namespace nndm {

// One Monte Carlo sample from the pseudo-posterior: Dirichlet weights plus a
// Gaussian kernel (eta_i, Sigma_i) per neighborhood. The packed mixture form
// is built at sampling time so repeated evaluation stays allocation-free.
class DensityDraw {
public:
  Eigen::VectorXd weights;
  Eigen::MatrixXd etas;           // n x p, one kernel location per row
  std::vector<double> sigma_data; // n * p * p covariance entries, row-major

  Eigen::Index count() const { return weights.size(); }
  Eigen::Index p() const { return etas.cols(); }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  sigma(Eigen::Index i) const {
    return {sigma_data.data() + static_cast<std::size_t>(i) * p() * p(), p(), p()};
  }

  const detail::PackedMixture& mixture() const { return mix_; }

  double log_density(const Eigen::VectorXd& x) const {
    if (x.size() != p()) throw invalid_parameter("DensityDraw: point has wrong dimension");
    std::vector<double> work = mix_.make_workspace();
    return mix_.logpdf(x.data(), work.data());
  }

  double density(const Eigen::VectorXd& x) const { return std::exp(log_density(x)); }

  void finalize_mixture();  // defined below

private:
  detail::PackedMixture mix_;
};

namespace detail {

// Draw from NIW(mu, nu_n, gamma_n, Psi) given the cached factor of Psi:
// Sigma via Bartlett-decomposed Wishart on the inverse scale (triangular
// solves only, no explicit inverses), then eta | Sigma ~ N(mu, Sigma/nu_n).
// Consumption order from `rng` is fixed: Bartlett diagonal, Bartlett
// off-diagonal, then the p normals for eta.
inline void sample_niw(Rng& rng, const NeighborhoodPosterior& post, Eigen::MatrixXd& bartlett,
                       Eigen::MatrixXd& u, Eigen::VectorXd& z, Eigen::VectorXd& eta_out,
                       Eigen::MatrixXd& sigma_out) {
  const Eigen::Index p = post.mu.size();
  bartlett.setZero(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    bartlett(r, r) = std::sqrt(rng.chi_squared(post.gamma_n - static_cast<double>(r)));
  for (Eigen::Index r = 1; r < p; ++r)
    for (Eigen::Index c = 0; c < r; ++c) bartlett(r, c) = rng.normal();

  // W = (Lpsi^{-T} A)(Lpsi^{-T} A)^T ~ Wishart(gamma_n, Psi^{-1}) and
  // Sigma = W^{-1} = U U^T with U = Lpsi A^{-T}, solved from A U^T = Lpsi^T.
  u = bartlett.triangularView<Eigen::Lower>()
          .solve(post.psi_chol.L.transpose())
          .transpose();
  sigma_out.noalias() = u * u.transpose();

  z.resize(p);
  rng.fill_normal(z);
  eta_out.noalias() = post.mu + (u * z) / std::sqrt(post.nu_n);
}

}  // namespace detail

inline void DensityDraw::finalize_mixture() {
  const int p = static_cast<int>(etas.cols());
  const int count = static_cast<int>(weights.size());
  mix_.p = p;
  mix_.count = count;
  mix_.df = 0.0;  // Gaussian components
  mix_.loc.resize(static_cast<std::size_t>(count) * p);
  mix_.factor.resize(static_cast<std::size_t>(count) * detail::PackedMixture::packed_size(p));
  mix_.log_norm.resize(count);
  Eigen::MatrixXd sig(p, p);
  for (int c = 0; c < count; ++c) {
    for (int r = 0; r < p; ++r) mix_.loc[static_cast<std::size_t>(c) * p + r] = etas(c, r);
    sig = sigma(c);
    Eigen::LLT<Eigen::MatrixXd> llt(sig);
    if (llt.info() != Eigen::Success)
      throw numerical_error("DensityDraw: sampled covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    double logdet = 0.0;
    double* f = mix_.factor.data() + static_cast<std::size_t>(c) * detail::PackedMixture::packed_size(p);
    int idx = 0;
    for (int r = 0; r < p; ++r) {
      for (int cc = 0; cc <= r; ++cc) f[idx++] = L(r, cc);
      logdet += 2.0 * std::log(L(r, r));
    }
    mix_.log_norm[c] = std::log(weights[c]) - 0.5 * (p * kLogTwoPi + logdet);
  }
}

// The t-th pseudo-posterior sample for a fitted model. Substreams are keyed
// by (seed, purpose, t[, i]), so any subset of draws can be generated in any
// order, on any number of threads, with identical output.
inline DensityDraw sample_one_draw(const FittedModel& model, std::uint64_t t, std::uint64_t seed) {
  const Eigen::Index n = model.n();
  const Eigen::Index p = model.p();
  DensityDraw draw;
  draw.weights.resize(n);
  Rng weight_rng(seed, stream::kWeights, t);
  weight_rng.dirichlet(model.hyper().alpha + 1.0, draw.weights);

  draw.etas.resize(n, p);
  draw.sigma_data.resize(static_cast<std::size_t>(n) * p * p);
  Eigen::MatrixXd bartlett(p, p), u(p, p), sigma(p, p);
  Eigen::VectorXd z(p), eta(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(seed, stream::kDraws, t, static_cast<std::uint64_t>(i));
    detail::sample_niw(rng, model.posteriors()[i], bartlett, u, z, eta, sigma);
    draw.etas.row(i) = eta.transpose();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        draw.sigma_data.data() + static_cast<std::size_t>(i) * p * p, p, p) = sigma;
  }
  draw.finalize_mixture();
  return draw;
}

// Generates draws t = 0..M-1 in parallel and hands each to `fn(t, draw)`.
// fn must only write to slots owned by t.
template <class F>
void for_each_draw(const FittedModel& model, std::int64_t m, std::uint64_t seed, F&& fn) {
  if (m < 1) throw invalid_parameter("for_each_draw: need at least one draw");
  parallel_for(m, [&](std::int64_t t) {
    const DensityDraw draw = sample_one_draw(model, static_cast<std::uint64_t>(t), seed);
    fn(t, draw);
  });
}

inline std::vector<DensityDraw> sample_draws(const FittedModel& model, std::int64_t m,
                                             std::uint64_t seed) {
  std::vector<DensityDraw> draws(m);
  for_each_draw(model, m, seed, [&](std::int64_t t, const DensityDraw& d) { draws[t] = d; });
  return draws;
}

// Sum_i pi_i phi_p(x; eta_i, Sigma_i), evaluated through log-sum-exp.
inline double evaluate_draw(const DensityDraw& draw, const Eigen::VectorXd& x) {
  return draw.density(x);
}

// Linear interpolation between order statistics with knots at k/M: the
// p-quantile is x_(h) with h = pM, interpolated between floor(h) and
// floor(h)+1, clamped to the extremes.
inline double interpolated_quantile(std::vector<double>& values, double prob) {
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  const double h = prob * m;
  if (h <= 1.0) return values.front();
  if (h >= m) return values.back();
  const auto lo = static_cast<std::size_t>(h);  // 1-based index of the lower order statistic
  const double frac = h - static_cast<double>(lo);
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

struct CredibleBand {
  Eigen::VectorXd lo;
  Eigen::VectorXd mc_mean;
  Eigen::VectorXd hi;
};

// Equal-tailed empirical band at each grid row, plus the Monte Carlo mean.
inline CredibleBand credible_band(const std::vector<DensityDraw>& draws,
                                  const Eigen::MatrixXd& grid, double level) {
  if (draws.empty()) throw invalid_parameter("credible_band: no draws");
  if (!(level > 0.0 && level < 1.0))
    throw invalid_parameter("credible_band: level must be inside (0, 1)");
  const Eigen::Index g = grid.rows();
  const auto m = static_cast<std::size_t>(draws.size());
  CredibleBand band;
  band.lo.resize(g);
  band.mc_mean.resize(g);
  band.hi.resize(g);
  const double tail = 0.5 * (1.0 - level);
  parallel_for(g, [&](std::int64_t gi) {
    std::vector<double> values(m);
    std::vector<double> work;
    const Eigen::VectorXd x = grid.row(gi).transpose();
    for (std::size_t t = 0; t < m; ++t) {
      const auto& mix = draws[t].mixture();
      if (work.size() < mix.make_workspace().size()) work = mix.make_workspace();
      values[t] = std::exp(mix.logpdf(x.data(), work.data()));
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    band.mc_mean[gi] = mean / static_cast<double>(m);
    band.lo[gi] = interpolated_quantile(values, tail);
    band.hi[gi] = interpolated_quantile(values, 1.0 - tail);
  });
  return band;
}

struct DensityTable {
  Eigen::MatrixXd grid;     // g x p
  Eigen::VectorXd mean;     // closed-form pseudo-posterior mean
  std::optional<CredibleBand> band;  // present when draws were requested
};

// Closed-form mean plus an optional Monte Carlo band on a grid of points.
inline DensityTable density_on_grid(const FittedModel& model, const Eigen::MatrixXd& grid,
                                    std::int64_t m_draws, double level, std::uint64_t seed) {
  if (grid.cols() != model.p())
    throw invalid_parameter("density_on_grid: grid dimension does not match the model");
  DensityTable table;
  table.grid = grid;
  table.mean.resize(grid.rows());
  parallel_for(grid.rows(), [&](std::int64_t gi) {
    table.mean[gi] = model.mean_density(grid.row(gi).transpose());
  });
  if (m_draws > 0) {
    const std::vector<DensityDraw> draws = sample_draws(model, m_draws, seed);
    table.band = credible_band(draws, grid, level);
  }
  return table;
}

}  // namespace nndm
