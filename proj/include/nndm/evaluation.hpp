#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nndm/dataset.hpp"
#include "nndm/densities.hpp"
#include "nndm/draws.hpp"
#include "nndm/errors.hpp"
#include "nndm/model.hpp"
#include "nndm/parallel.hpp"
#include "nndm/rng.hpp"

namespace nndm {

// Floor for log densities so an underflowing test point cannot poison a mean.
inline constexpr double kLogDensityFloor = -708.0;

struct L1Report {
  std::vector<double> replicates;  // NaN where the fit failed
  std::vector<std::string> failures;
  double mean = std::numeric_limits<double>::quiet_NaN();
  int n = 0;
  int n_t = 0;
  int r = 0;
  std::uint64_t seed = 0;
};

// The per-replicate statistic: mean of |fhat(x)/f0(x) - 1| over test rows.
template <class LogDensity>
double l1_statistic(const TestDensity& density, LogDensity&& fhat_log,
                    const Eigen::MatrixXd& test) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    const Eigen::VectorXd x = test.row(i).transpose();
    const double log_ratio = fhat_log(x) - density.log_pdf(x);
    total += std::abs(std::exp(log_ratio) - 1.0);
  }
  return total / static_cast<double>(test.rows());
}

// Monte Carlo estimate of E int |f0 - fhat|: per replicate, fit on n fresh
// training points and average |fhat/f0 - 1| over n_t fresh test points.
inline L1Report l1_error(const TestDensity& density, const FitOptions& fit_options, int n,
                         int n_t, int r, std::uint64_t seed) {
  if (r < 1 || n_t < 1) throw invalid_parameter("l1_error: need r >= 1 and n_t >= 1");
  L1Report report;
  report.replicates.assign(r, std::numeric_limits<double>::quiet_NaN());
  report.failures.assign(r, "");
  report.n = n;
  report.n_t = n_t;
  report.r = r;
  report.seed = seed;

  parallel_for(r, [&](std::int64_t rep) {
    Rng train_rng(seed, stream::kBenchTrain, static_cast<std::uint64_t>(rep));
    const Dataset train(density.sample_matrix(train_rng, n));
    FittedModel model;
    try {
      model = fit(train, fit_options);
    } catch (const std::exception& e) {
      report.failures[rep] = e.what();
      return;
    }
    Rng test_rng(seed, stream::kBenchTest, static_cast<std::uint64_t>(rep));
    const Eigen::MatrixXd test = density.sample_matrix(test_rng, n_t);
    report.replicates[rep] = l1_statistic(
        density, [&](const Eigen::VectorXd& x) { return model.mean_log_density(x); }, test);
  });

  double sum = 0.0;
  int ok = 0;
  for (double v : report.replicates)
    if (!std::isnan(v)) {
      sum += v;
      ++ok;
    }
  if (ok > 0) report.mean = sum / ok;
  return report;
}

struct OosllResult {
  double value = 0.0;
  int floored = 0;  // test points whose log density hit the floor
};

// Out-of-sample log-likelihood, scaled by the number of test points.
inline OosllResult oosll(const FittedModel& model, const Dataset& test) {
  if (test.p() != model.p()) throw invalid_parameter("oosll: dimension mismatch");
  OosllResult result;
  double total = 0.0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    double ld = model.mean_log_density(test.row(i));
    if (!(ld > kLogDensityFloor)) {
      ld = kLogDensityFloor;
      ++result.floored;
    }
    total += ld;
  }
  result.value = total / static_cast<double>(test.n());
  return result;
}

// Fraction of truths inside [lo, hi] and the mean interval length.
inline std::pair<double, double> coverage_stats(const Eigen::VectorXd& truth,
                                                const Eigen::VectorXd& lo,
                                                const Eigen::VectorXd& hi) {
  if (truth.size() != lo.size() || truth.size() != hi.size() || truth.size() == 0)
    throw invalid_parameter("coverage_stats: mismatched interval arrays");
  int covered = 0;
  double length = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (truth[i] >= lo[i] && truth[i] <= hi[i]) ++covered;
    length += hi[i] - lo[i];
  }
  return {static_cast<double>(covered) / static_cast<double>(truth.size()),
          length / static_cast<double>(truth.size())};
}

struct CoverageReport {
  double avg_coverage = 0.0;
  double avg_length = 0.0;
  std::vector<double> replicate_coverage;
  std::vector<double> replicate_length;
  std::vector<std::string> failures;
  int n = 0, n_t = 0, r_cov = 0, m_draws = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Frequentist coverage of equal-tailed pseudo-credible intervals: n_t test
// points are fixed once; every replicate refits on fresh training data and
// checks whether the true density value falls inside the interval.
inline CoverageReport coverage_experiment(const TestDensity& density, const FitOptions& fit_options,
                                          int n, int n_t, int r_cov, double level,
                                          std::int64_t m_draws, std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0))
    throw invalid_parameter("coverage_experiment: level must be inside (0, 1)");
  if (r_cov < 1 || n_t < 1 || m_draws < 2)
    throw invalid_parameter("coverage_experiment: need r_cov >= 1, n_t >= 1, m_draws >= 2");

  CoverageReport report;
  report.n = n;
  report.n_t = n_t;
  report.r_cov = r_cov;
  report.m_draws = static_cast<int>(m_draws);
  report.level = level;
  report.seed = seed;
  report.replicate_coverage.assign(r_cov, std::numeric_limits<double>::quiet_NaN());
  report.replicate_length.assign(r_cov, std::numeric_limits<double>::quiet_NaN());
  report.failures.assign(r_cov, "");

  Rng test_rng(seed, stream::kCoverageTest, 0);
  const Eigen::MatrixXd test = density.sample_matrix(test_rng, n_t);
  Eigen::VectorXd truth(n_t);
  for (Eigen::Index i = 0; i < n_t; ++i)
    truth[i] = std::exp(density.log_pdf(test.row(i).transpose()));

  const double tail = 0.5 * (1.0 - level);
  parallel_for(r_cov, [&](std::int64_t rep) {
    Rng train_rng(seed, stream::kCoverageTrain, static_cast<std::uint64_t>(rep));
    const Dataset train(density.sample_matrix(train_rng, n));
    FittedModel model;
    try {
      model = fit(train, fit_options);
    } catch (const std::exception& e) {
      report.failures[rep] = e.what();
      return;
    }
    const std::uint64_t rep_seed = derive_seed(seed, static_cast<std::uint64_t>(rep));
    // draw values per (draw, test point), then per-point interval
    Eigen::MatrixXd values(m_draws, n_t);
    for_each_draw(model, m_draws, rep_seed, [&](std::int64_t t, const DensityDraw& draw) {
      std::vector<double> work = draw.mixture().make_workspace();
      for (Eigen::Index i = 0; i < test.rows(); ++i) {
        const Eigen::VectorXd x = test.row(i).transpose();
        values(t, i) = std::exp(draw.mixture().logpdf(x.data(), work.data()));
      }
    });
    Eigen::VectorXd lo(n_t), hi(n_t);
    std::vector<double> column(m_draws);
    for (Eigen::Index i = 0; i < n_t; ++i) {
      for (std::int64_t t = 0; t < m_draws; ++t) column[t] = values(t, i);
      lo[i] = interpolated_quantile(column, tail);
      hi[i] = interpolated_quantile(column, 1.0 - tail);
    }
    const auto [coverage, length] = coverage_stats(truth, lo, hi);
    report.replicate_coverage[rep] = coverage;
    report.replicate_length[rep] = length;
  });

  double cov_sum = 0.0, len_sum = 0.0;
  int ok = 0;
  for (int rep = 0; rep < r_cov; ++rep)
    if (!std::isnan(report.replicate_coverage[rep])) {
      cov_sum += report.replicate_coverage[rep];
      len_sum += report.replicate_length[rep];
      ++ok;
    }
  if (ok > 0) {
    report.avg_coverage = cov_sum / ok;
    report.avg_length = len_sum / ok;
  }
  return report;
}

struct KSweepRow {
  int k = 0;
  double mean_oosll = 0.0;
  int floored = 0;
};

// Out-of-sample log-likelihood on a fixed test set as a function of k,
// averaged over replicate training samples. delta0sq is re-cross-validated
// for every k unless the options pin it.
inline std::vector<KSweepRow> k_sweep(const TestDensity& density, const FitOptions& base_options,
                                      int n, int n_t, const std::vector<int>& k_values, int reps,
                                      std::uint64_t seed) {
  if (k_values.empty()) throw invalid_parameter("k_sweep: empty k list");
  for (int k : k_values)
    if (k < 2) throw invalid_parameter("k_sweep: every k must be >= 2");
  if (reps < 1) throw invalid_parameter("k_sweep: need reps >= 1");

  Rng test_rng(seed, stream::kBenchTest, 0);
  const Dataset test(density.sample_matrix(test_rng, n_t));

  std::vector<KSweepRow> rows(k_values.size());
  std::vector<std::vector<double>> per_rep(k_values.size(),
                                           std::vector<double>(reps, 0.0));
  std::vector<std::vector<int>> floored(k_values.size(), std::vector<int>(reps, 0));
  parallel_for(reps, [&](std::int64_t rep) {
    Rng train_rng(seed, stream::kKSweep, static_cast<std::uint64_t>(rep));
    const Dataset train(density.sample_matrix(train_rng, n));
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
      FitOptions options = base_options;
      options.k = k_values[ki];
      const FittedModel model = fit(train, options);
      const OosllResult res = oosll(model, test);
      per_rep[ki][rep] = res.value;
      floored[ki][rep] = res.floored;
    }
  });
  for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
    rows[ki].k = k_values[ki];
    double sum = 0.0;
    int fl = 0;
    for (int rep = 0; rep < reps; ++rep) {
      sum += per_rep[ki][rep];
      fl += floored[ki][rep];
    }
    rows[ki].mean_oosll = sum / reps;
    rows[ki].floored = fl;
  }
  return rows;
}

}  // namespace nndm
