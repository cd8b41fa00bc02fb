#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "nndm/dataset.hpp"
#include "nndm/draws.hpp"
#include "nndm/errors.hpp"
#include "nndm/model.hpp"
#include "nndm/parallel.hpp"

namespace nndm {

struct ClassifierOptions {
  FitOptions fit;                 // shared by both class fits
  double prior1 = std::numeric_limits<double>::quiet_NaN();  // NaN -> training prevalence
  bool standardize = false;       // center/scale features on the pooled training data
};

enum class PriorSource { kTrainPrevalence, kUserSupplied };

// Two per-class density models plugged into Bayes' rule.
class ClassifierModel {
public:
  FittedModel class0;
  FittedModel class1;
  double prior0 = 0.5;
  double prior1 = 0.5;
  PriorSource prior_source = PriorSource::kTrainPrevalence;
  bool standardized = false;
  Eigen::VectorXd center;  // used when standardized
  Eigen::VectorXd scale;

  Eigen::Index p() const { return class0.p(); }

  Eigen::VectorXd transform(const Eigen::VectorXd& x) const {
    if (!standardized) return x;
    return (x - center).cwiseQuotient(scale);
  }
};

inline ClassifierModel fit_classifier(const Dataset& x, const std::vector<int>& y,
                                      const ClassifierOptions& options = {}) {
  if (static_cast<Eigen::Index>(y.size()) != x.n())
    throw invalid_parameter("fit_classifier: label count does not match rows");
  for (int label : y)
    if (label != 0 && label != 1) throw invalid_data("fit_classifier: labels must be 0 or 1");
  const auto n1 = static_cast<Eigen::Index>(std::count(y.begin(), y.end(), 1));
  const Eigen::Index n0 = x.n() - n1;
  if (n0 == 0 || n1 == 0) throw invalid_data("fit_classifier: both classes must be present");

  ClassifierModel model;
  model.standardized = options.standardize;
  Eigen::MatrixXd values = x.values;
  if (options.standardize) {
    model.center = values.colwise().mean().transpose();
    Eigen::MatrixXd centered = values.rowwise() - model.center.transpose();
    model.scale = (centered.colwise().squaredNorm() / static_cast<double>(x.n() - 1))
                      .cwiseSqrt()
                      .transpose();
    for (Eigen::Index j = 0; j < model.scale.size(); ++j)
      if (!(model.scale[j] > 0.0))
        throw degenerate_data("fit_classifier: constant feature cannot be standardized");
    values = centered.array().rowwise() / model.scale.transpose().array();
  }

  Eigen::MatrixXd x0(n0, x.p()), x1(n1, x.p());
  Eigen::Index i0 = 0, i1 = 0;
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    if (y[i] == 0)
      x0.row(i0++) = values.row(i);
    else
      x1.row(i1++) = values.row(i);
  }

  model.class0 = fit(Dataset(x0), options.fit);
  model.class1 = fit(Dataset(x1), options.fit);

  if (std::isnan(options.prior1)) {
    model.prior1 = static_cast<double>(n1) / static_cast<double>(x.n());
    model.prior0 = static_cast<double>(n0) / static_cast<double>(x.n());
    model.prior_source = PriorSource::kTrainPrevalence;
  } else {
    if (!(options.prior1 >= 0.0 && options.prior1 <= 1.0))
      throw invalid_parameter("fit_classifier: prior1 must lie in [0, 1]");
    model.prior1 = options.prior1;
    model.prior0 = 1.0 - options.prior1;
    model.prior_source = PriorSource::kUserSupplied;
  }
  return model;
}

struct ClassProbability {
  double prob1 = 0.5;
  bool extrapolated = false;  // both class densities underflowed at this point
};

namespace detail {

inline ClassProbability bayes_probability(double log_f0, double log_f1, double prior0,
                                          double prior1) {
  ClassProbability out;
  const double l0 = log_f0 + std::log(prior0);
  const double l1 = log_f1 + std::log(prior1);
  if (!std::isfinite(l0) && !std::isfinite(l1)) {
    out.prob1 = prior1;
    out.extrapolated = true;
    return out;
  }
  const double m = std::max(l0, l1);
  out.prob1 = std::exp(l1 - m) / (std::exp(l0 - m) + std::exp(l1 - m));
  return out;
}

}  // namespace detail

// Mean-mode probability: posterior-mean density of each class in Bayes' rule.
inline ClassProbability predict_proba_mean(const ClassifierModel& model,
                                           const Eigen::VectorXd& x) {
  const Eigen::VectorXd z = model.transform(x);
  return detail::bayes_probability(model.class0.mean_log_density(z),
                                   model.class1.mean_log_density(z), model.prior0, model.prior1);
}

// Draw-mode probabilities: the t-th pseudo-posterior draw of class 0 is
// paired with the t-th draw of class 1, giving M probability samples per
// test point. Row t of the result is the probability vector of draw t.
inline Eigen::MatrixXd predict_proba_draws(const ClassifierModel& model,
                                           const Eigen::MatrixXd& x_test, std::int64_t m_draws,
                                           std::uint64_t seed) {
  if (x_test.cols() != model.p())
    throw invalid_parameter("predict_proba_draws: wrong feature dimension");
  if (m_draws < 1) throw invalid_parameter("predict_proba_draws: need m_draws >= 1");
  const std::uint64_t seed0 = derive_seed(seed, 0);
  const std::uint64_t seed1 = derive_seed(seed, 1);
  Eigen::MatrixXd z(x_test.rows(), x_test.cols());
  for (Eigen::Index i = 0; i < x_test.rows(); ++i)
    z.row(i) = model.transform(x_test.row(i).transpose()).transpose();

  Eigen::MatrixXd probs(m_draws, x_test.rows());
  parallel_for(m_draws, [&](std::int64_t t) {
    const DensityDraw d0 = sample_one_draw(model.class0, static_cast<std::uint64_t>(t), seed0);
    const DensityDraw d1 = sample_one_draw(model.class1, static_cast<std::uint64_t>(t), seed1);
    std::vector<double> w0 = d0.mixture().make_workspace();
    std::vector<double> w1 = d1.mixture().make_workspace();
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const Eigen::VectorXd xi = z.row(i).transpose();
      const double l0 = d0.mixture().logpdf(xi.data(), w0.data());
      const double l1 = d1.mixture().logpdf(xi.data(), w1.data());
      probs(t, i) = detail::bayes_probability(l0, l1, model.prior0, model.prior1).prob1;
    }
  });
  return probs;
}

struct BrierScore {
  Eigen::VectorXd per_draw;
  double mean = 0.0;
};

// Normalized Brier score per probability sample: (1/n_t) ||p_t - y||^2.
inline BrierScore brier_score(const Eigen::MatrixXd& prob_draws, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != prob_draws.cols())
    throw invalid_parameter("brier_score: label count does not match probability columns");
  BrierScore score;
  score.per_draw.resize(prob_draws.rows());
  const auto n_t = static_cast<double>(labels.size());
  for (Eigen::Index t = 0; t < prob_draws.rows(); ++t) {
    double ss = 0.0;
    for (Eigen::Index i = 0; i < prob_draws.cols(); ++i) {
      const double d = prob_draws(t, i) - static_cast<double>(labels[i]);
      ss += d * d;
    }
    score.per_draw[t] = ss / n_t;
  }
  score.mean = score.per_draw.mean();
  return score;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.5;
};

// ROC curve over all score thresholds and the rank-statistic AUC
// (Mann-Whitney with midranks for ties).
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw invalid_parameter("roc_auc: scores and labels differ in length");
  const auto n = scores.size();
  std::size_t n1 = 0;
  for (int label : labels) {
    if (label != 0 && label != 1) throw invalid_data("roc_auc: labels must be 0 or 1");
    n1 += static_cast<std::size_t>(label);
  }
  const std::size_t n0 = n - n1;
  if (n0 == 0 || n1 == 0) throw invalid_data("roc_auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney: sum of positive midranks
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t l = i; l < j; ++l)
      if (labels[order[l]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  RocCurve curve;
  curve.auc = (rank_sum_pos - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1)) /
              (static_cast<double>(n0) * static_cast<double>(n1));

  // Sweep thresholds from high to low; a point per distinct score.
  curve.points.push_back({0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = n; i > 0;) {
    std::size_t j = i;
    while (j > 0 && scores[order[j - 1]] == scores[order[i - 1]]) --j;
    for (std::size_t l = j; l < i; ++l) {
      if (labels[order[l]] == 1)
        tp += 1.0;
      else
        fp += 1.0;
    }
    curve.points.push_back({fp / static_cast<double>(n0), tp / static_cast<double>(n1)});
    i = j;
  }
  return curve;
}

}  // namespace nndm
