#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "nndm/model.hpp"
#include "test_util.hpp"

using nndm::Dataset;
using nndm::fit;
using nndm::FitOptions;
using nndm::FittedModel;

namespace {

std::string serialize(const FittedModel& model) {
  std::ostringstream out;
  nndm::save_model(model, out);
  return out.str();
}

}  // namespace

TEST(Fit, FacadeEqualsManualComposition) {
  nndm::Rng rng(61);
  const Dataset data(testutil::random_normal_matrix(rng, 35, 2));
  FitOptions options;
  options.k = 7;
  const FittedModel model = fit(data, options);

  nndm::Hyperparameters hyper = nndm::default_hyperparameters(35, 2);
  hyper.k = 7;
  const auto neighborhoods = nndm::build_neighborhoods(data, 7);
  for (int i = 0; i < 35; ++i) {
    const auto post = nndm::update_neighborhood(neighborhoods[i], hyper);
    ASSERT_TRUE(model.posteriors()[i].mu == post.mu);
    ASSERT_TRUE(model.posteriors()[i].psi == post.psi);
  }
}

TEST(Fit, DeterministicModelBytes) {
  nndm::Rng rng(67);
  const Dataset data(testutil::random_normal_matrix(rng, 40, 1));
  FitOptions options;
  options.cv = true;
  options.seed = 5;
  const std::string once = serialize(fit(data, options));
  const std::string twice = serialize(fit(data, options));
  EXPECT_EQ(once, twice);

  // thread count does not change the result
  nndm::set_thread_count(1);
  const std::string serial = serialize(fit(data, options));
  nndm::set_thread_count(2);
  const std::string parallel = serialize(fit(data, options));
  EXPECT_EQ(serial, parallel);
}

TEST(Fit, KEqualsNGivesSingleKernel) {
  nndm::Rng rng(71);
  const Dataset data(testutil::random_normal_matrix(rng, 12, 1));
  FitOptions options;
  options.k = 12;
  const FittedModel model = fit(data, options);
  const auto& first = model.posteriors()[0];
  for (const auto& post : model.posteriors()) {
    ASSERT_NEAR(post.mu[0], first.mu[0], 1e-12);
    ASSERT_NEAR(post.psi(0, 0), first.psi(0, 0), 1e-11);
  }
  // mean equals one t kernel
  const double df = model.t_df();
  for (double x : {-1.0, 0.0, 0.7, 2.5}) {
    Eigen::VectorXd xv(1);
    xv << x;
    const double single = std::exp(nndm::mvt_logpdf(xv, df, first.mu, first.lambda_chol()));
    ASSERT_NEAR(model.mean_density(xv), single, 1e-12 * std::max(single, 1.0));
  }
}

TEST(Fit, OptionValidation) {
  nndm::Rng rng(73);
  const Dataset data(testutil::random_normal_matrix(rng, 10, 1));
  FitOptions both;
  both.cv = true;
  both.delta0sq = 1.0;
  EXPECT_THROW(fit(data, both), nndm::invalid_parameter);
  FitOptions both_alpha;
  both_alpha.alpha = 0.5;
  both_alpha.alpha_rule = true;
  EXPECT_THROW(fit(data, both_alpha), nndm::invalid_parameter);
  FitOptions big_k;
  big_k.k = 11;
  EXPECT_THROW(fit(data, big_k), nndm::invalid_parameter);
}

TEST(Fit, ProvenanceRecordsSources) {
  nndm::Rng rng(79);
  const Dataset data(testutil::random_normal_matrix(rng, 30, 1));
  EXPECT_EQ(fit(data).provenance().delta0sq_source, nndm::ValueSource::kDefault);
  FitOptions user;
  user.delta0sq = 0.5;
  user.alpha = 0.1;
  const FittedModel m1 = fit(data, user);
  EXPECT_EQ(m1.provenance().delta0sq_source, nndm::ValueSource::kUser);
  EXPECT_EQ(m1.provenance().alpha_source, nndm::ValueSource::kUser);
  FitOptions rule;
  rule.cv = true;
  rule.alpha_rule = true;
  const FittedModel m2 = fit(data, rule);
  EXPECT_EQ(m2.provenance().delta0sq_source, nndm::ValueSource::kCv);
  EXPECT_EQ(m2.provenance().alpha_source, nndm::ValueSource::kRule);
  EXPECT_TRUE(m2.cv_result().has_value());
  EXPECT_GT(m2.hyper().alpha, 0.0);
}

TEST(MeanDensity, UnivariateRouteAgreesWithMultivariate) {
  nndm::Rng rng(83);
  const Dataset data(testutil::random_normal_matrix(rng, 50, 1));
  const FittedModel model = fit(data);
  for (int g = 0; g <= 40; ++g) {
    const double x = -4.0 + 0.2 * g;
    Eigen::VectorXd xv(1);
    xv << x;
    ASSERT_NEAR(model.mean_density_univariate(x), model.mean_density(xv), 1e-10);
  }
}

TEST(MeanDensity, FarTailsUnderflowToZeroNotNan) {
  nndm::Rng rng(87);
  const Dataset data(testutil::random_normal_matrix(rng, 20, 1));
  const FittedModel model = fit(data);
  Eigen::VectorXd far(1);
  far << 1e160;
  EXPECT_EQ(model.mean_density(far), 0.0);
  EXPECT_EQ(model.mean_density_univariate(1e160), 0.0);
  EXPECT_EQ(model.mean_log_density(far), -std::numeric_limits<double>::infinity());
}

TEST(MeanDensity, IntegratesToOneOnGridData) {
  // 30 points on a uniform grid; trapezoid quadrature over [-20, 20]
  Eigen::MatrixXd m(30, 1);
  for (int i = 0; i < 30; ++i) m(i, 0) = -2.0 + 4.0 * i / 29.0;
  const FittedModel model = fit(Dataset(m));
  const int steps = 40000;
  const double lo = -20.0, hi = 20.0, h = (hi - lo) / steps;
  double sum = 0.0;
  Eigen::VectorXd x(1);
  for (int i = 0; i <= steps; ++i) {
    x[0] = lo + i * h;
    const double v = model.mean_density(x);
    sum += (i == 0 || i == steps) ? 0.5 * v : v;
  }
  EXPECT_NEAR(sum * h, 1.0, 1e-3);
}

TEST(MeanDensity, RecoverGaussianAtZero) {
  // over 20 replicate standard-normal datasets the mean density at 0 should
  // usually land near phi(0) = 0.399
  int hits = 0;
  for (int rep = 0; rep < 20; ++rep) {
    nndm::Rng rng(17, 99, rep);
    const Dataset data(testutil::random_normal_matrix(rng, 200, 1));
    const FittedModel model = fit(data);
    Eigen::VectorXd zero(1);
    zero << 0.0;
    const double value = model.mean_density(zero);
    if (value >= 0.3 && value <= 0.5) ++hits;
  }
  EXPECT_GE(hits, 18);
}

TEST(MeanDensity, PermutationStability) {
  // distinct-distance data: permuting rows leaves density values unchanged
  nndm::Rng rng(91);
  const Eigen::MatrixXd values = testutil::random_normal_matrix(rng, 30, 2);
  FitOptions options;
  options.k = 6;
  const FittedModel base = fit(Dataset(values), options);
  Eigen::MatrixXd shuffled(30, 2);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 29; i > 0; --i) std::swap(perm[i], perm[static_cast<int>(rng.uniform01() * (i + 1))]);
  for (int i = 0; i < 30; ++i) shuffled.row(perm[i]) = values.row(i);
  const FittedModel permuted = fit(Dataset(shuffled), options);
  for (int g = 0; g < 20; ++g) {
    Eigen::VectorXd x(2);
    x << rng.uniform(-2, 2), rng.uniform(-2, 2);
    const double a = base.mean_density(x);
    const double b = permuted.mean_density(x);
    ASSERT_NEAR(a, b, 1e-12 * std::max(a, 1e-8));
  }
}

TEST(Persistence, RoundTripIsLossless) {
  nndm::Rng rng(89);
  const Dataset data(testutil::random_normal_matrix(rng, 25, 3));
  FitOptions options;
  options.k = 8;
  options.alpha = 0.25;
  options.seed = 321;
  const FittedModel model = fit(data, options);
  std::stringstream buffer;
  nndm::save_model(model, buffer);
  const FittedModel reloaded = nndm::load_model(buffer);

  EXPECT_EQ(reloaded.n(), model.n());
  EXPECT_EQ(reloaded.p(), model.p());
  EXPECT_EQ(reloaded.hyper().k, model.hyper().k);
  EXPECT_EQ(reloaded.hyper().alpha, model.hyper().alpha);
  EXPECT_EQ(reloaded.provenance().seed, model.provenance().seed);
  for (int i = 0; i < 25; ++i) {
    ASSERT_TRUE(reloaded.posteriors()[i].mu == model.posteriors()[i].mu);
    ASSERT_TRUE(reloaded.posteriors()[i].psi == model.posteriors()[i].psi);
  }
  // second serialization is byte-identical
  EXPECT_EQ(serialize(reloaded), serialize(model));
}

TEST(Persistence, RejectsBadFiles) {
  nndm::Rng rng(97);
  const Dataset data(testutil::random_normal_matrix(rng, 10, 1));
  const FittedModel model = fit(data);
  const std::string full = serialize(model);

  // truncation at various points: always a parse error, never a partial model
  for (std::size_t cut : {std::size_t(3), full.size() / 4, full.size() / 2, full.size() - 4}) {
    std::istringstream in(full.substr(0, cut));
    EXPECT_THROW(nndm::load_model(in), nndm::parse_error) << "cut at " << cut;
  }

  std::istringstream wrong_magic("other-format 1\n");
  EXPECT_THROW(nndm::load_model(wrong_magic), nndm::parse_error);

  // future version: explicit version error
  std::string future = full;
  future.replace(future.find(" 1\n"), 3, " 2\n");
  std::istringstream in(future);
  try {
    nndm::load_model(in);
    FAIL() << "expected version error";
  } catch (const nndm::parse_error& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos) << e.what();
  }

  // corrupt numeric field
  std::string corrupt = full;
  corrupt.replace(corrupt.find("nu0 "), 7, "nu0 z.z");
  std::istringstream in2(corrupt);
  EXPECT_THROW(nndm::load_model(in2), nndm::parse_error);
}
