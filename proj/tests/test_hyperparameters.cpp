#include <gtest/gtest.h>

#include "nndm/hyperparameters.hpp"
#include "test_util.hpp"

using nndm::bandwidth_h2;
using nndm::choose_alpha;
using nndm::Dataset;
using nndm::default_hyperparameters;
using nndm::Hyperparameters;

TEST(Defaults, SectionTwoThreeValues) {
  const Hyperparameters h = default_hyperparameters(200, 1);
  EXPECT_EQ(h.k, 6);  // floor(200^{1/3}) + 1
  EXPECT_DOUBLE_EQ(h.nu0, 0.001);
  EXPECT_DOUBLE_EQ(h.gamma0, 1.0);
  EXPECT_DOUBLE_EQ(h.delta0sq, 1.0);
  EXPECT_TRUE(h.mu0.isZero());
  EXPECT_TRUE(h.psi0().isApprox(Eigen::MatrixXd::Identity(1, 1)));

  const Hyperparameters h4 = default_hyperparameters(1000, 4);
  EXPECT_EQ(h4.k, 10);
  EXPECT_DOUBLE_EQ(h4.gamma0, 4.0);
  EXPECT_TRUE(h4.psi0().isApprox(Eigen::MatrixXd::Identity(4, 4)));

  // cap at n - 1
  EXPECT_EQ(default_hyperparameters(5, 3).k, 4);
}

TEST(Defaults, CubeRootRuleExactAtCubes) {
  EXPECT_EQ(default_hyperparameters(8, 1).k, 3);
  EXPECT_EQ(default_hyperparameters(26, 1).k, 3);
  EXPECT_EQ(default_hyperparameters(27, 1).k, 4);
  EXPECT_EQ(default_hyperparameters(500, 1).k, 8);
  EXPECT_THROW(default_hyperparameters(2, 1), nndm::invalid_parameter);
}

TEST(Bandwidth, ClosedForm) {
  // nu0=0, gamma0=1, delta0sq=1, k=9, p=1:
  // h^2 = (nu_n+1)(gamma0-p+1) / (nu_n (gamma_n-p+1)) = 10*1/(9*10) = 1/9
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(1);
  h.nu0 = 0.0;
  h.gamma0 = 1.0;
  h.delta0sq = 1.0;
  h.k = 9;
  EXPECT_NEAR(bandwidth_h2(h, 1), 10.0 / 90.0, 1e-15);

  // linear in delta0sq
  h.delta0sq = 3.7;
  EXPECT_NEAR(bandwidth_h2(h, 1), 3.7 * 10.0 / 90.0, 1e-15);

  // decreasing toward zero in k
  h.delta0sq = 1.0;
  h.k = 1000000;
  EXPECT_LT(bandwidth_h2(h, 1), 2e-6);
}

TEST(Bandwidth, RejectsNonPositiveDf) {
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(3);
  h.nu0 = 0.001;
  h.gamma0 = 1.0;  // gamma0 - p + 1 = -1
  h.k = 5;
  EXPECT_THROW(bandwidth_h2(h, 3), nndm::invalid_parameter);
  EXPECT_THROW(h.validate(), nndm::invalid_parameter);
}

TEST(Alpha, UnivariateClosedForm) {
  // sigma^2=1, gamma0=1, delta0sq=1, k=99, nu0=1 -> alpha = 1/(100*100)
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(1);
  h.nu0 = 1.0;
  h.gamma0 = 1.0;
  h.delta0sq = 1.0;
  h.k = 99;
  // data with unbiased sample variance exactly 1
  Eigen::MatrixXd m(2, 1);
  m << 0.0, std::sqrt(2.0);
  EXPECT_NEAR(choose_alpha(Dataset(m), h), 1e-4, 1e-12);

  // alpha -> 0 with delta0sq
  h.delta0sq = 1e-12;
  EXPECT_LT(choose_alpha(Dataset(m), h), 1e-15);
}

TEST(Alpha, MultivariateReducesToUnivariateUpToFactor) {
  // at p=1 the multivariate rule |H|/(nu_n |S|) equals the univariate rule
  // times (nu_n + 1)/nu_n; check the relation and near-equality for large k
  nndm::Rng rng(21);
  const Eigen::MatrixXd data = testutil::random_normal_matrix(rng, 300, 1);
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(1);
  h.nu0 = 0.001;
  h.gamma0 = 1.0;
  h.delta0sq = 0.8;
  h.k = 50;

  const double alpha_uni = choose_alpha(Dataset(data), h);
  const double mean = data.col(0).mean();
  const double var = (data.col(0).array() - mean).square().sum() / (data.rows() - 1.0);
  const double alpha_mult = bandwidth_h2(h, 1) / (h.nu_n() * var);
  EXPECT_NEAR(alpha_mult, alpha_uni * (h.nu_n() + 1.0) / h.nu_n(), 1e-15 + alpha_uni * 1e-10);
  EXPECT_NEAR(alpha_mult / alpha_uni, 1.0, 0.05);
}

TEST(Alpha, DecreasesWithSampleVariance) {
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(1);
  h.nu0 = 0.001;
  h.gamma0 = 1.0;
  h.delta0sq = 1.0;
  h.k = 10;
  Eigen::MatrixXd narrow(4, 1), wide(4, 1);
  narrow << -1, 0, 0, 1;
  wide << -10, 0, 0, 10;
  EXPECT_GT(choose_alpha(Dataset(narrow), h), choose_alpha(Dataset(wide), h));
  EXPECT_GE(choose_alpha(Dataset(wide), h), 0.0);
}

TEST(Alpha, MultivariatePath) {
  nndm::Rng rng(33);
  const Eigen::MatrixXd data = testutil::random_normal_matrix(rng, 100, 2);
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(2);
  h.nu0 = 0.001;
  h.gamma0 = 2.0;
  h.delta0sq = 1.0;
  h.k = 10;
  const double alpha = choose_alpha(Dataset(data), h);
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const double det = (centered.transpose() * centered / 99.0).determinant();
  const double h2 = bandwidth_h2(h, 2);
  EXPECT_NEAR(alpha, h2 * h2 / (h.nu_n() * det), 1e-15 + alpha * 1e-12);
}

TEST(Alpha, DegenerateData) {
  Hyperparameters h;
  h.mu0 = Eigen::VectorXd::Zero(1);
  h.gamma0 = 1.0;
  h.k = 2;
  Eigen::MatrixXd constant(5, 1);
  constant.setConstant(3.0);
  EXPECT_THROW(choose_alpha(Dataset(constant), h), nndm::degenerate_data);

  h.mu0 = Eigen::VectorXd::Zero(2);
  h.gamma0 = 2.0;
  Eigen::MatrixXd collinear(5, 2);
  for (int i = 0; i < 5; ++i) collinear.row(i) << i, 2.0 * i;
  EXPECT_THROW(choose_alpha(Dataset(collinear), h), nndm::degenerate_data);
}
