#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nndm/neighbors.hpp"
#include "test_util.hpp"

using nndm::Dataset;
using nndm::LooStats;
using nndm::Neighborhood;

namespace {

// O(n^2) full-sort reference for the k-nearest-neighbor member lists.
std::vector<std::vector<Eigen::Index>> brute_force_members(const Eigen::MatrixXd& values, int k) {
  const Eigen::Index n = values.rows();
  std::vector<std::vector<Eigen::Index>> result(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      all.emplace_back((values.row(i) - values.row(j)).squaredNorm(), j);
    }
    std::sort(all.begin(), all.end());
    result[i].push_back(i);
    for (int m = 0; m < k - 1; ++m) result[i].push_back(all[m].second);
  }
  return result;
}

void naive_loo_stats(const Eigen::MatrixXd& values, int k, Eigen::Index j, Eigen::Index excluded,
                     Eigen::VectorXd& mean, Eigen::MatrixXd& scatter) {
  // k-member neighborhood of j in the data with `excluded` removed
  std::vector<std::pair<double, Eigen::Index>> all;
  for (Eigen::Index u = 0; u < values.rows(); ++u) {
    if (u == j || u == excluded) continue;
    all.emplace_back((values.row(j) - values.row(u)).squaredNorm(), u);
  }
  std::sort(all.begin(), all.end());
  std::vector<Eigen::Index> members{j};
  for (int m = 0; m < k - 1; ++m) members.push_back(all[m].second);
  const Eigen::Index p = values.cols();
  mean = Eigen::VectorXd::Zero(p);
  for (Eigen::Index u : members) mean += values.row(u).transpose();
  mean /= static_cast<double>(k);
  scatter = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index u : members) {
    const Eigen::VectorXd d = values.row(u).transpose() - mean;
    scatter += d * d.transpose();
  }
}

}  // namespace

TEST(Neighbors, UnambiguousGaps) {
  Eigen::MatrixXd m(3, 1);
  m << 0, 1, 10;
  const auto nbs = nndm::build_neighborhoods(Dataset(m), 2);
  EXPECT_EQ(nbs[0].members, (std::vector<Eigen::Index>{0, 1}));
  EXPECT_EQ(nbs[1].members, (std::vector<Eigen::Index>{1, 0}));
  EXPECT_EQ(nbs[2].members, (std::vector<Eigen::Index>{2, 1}));
  EXPECT_DOUBLE_EQ(nbs[2].radius, 9.0);
}

TEST(Neighbors, ExactTiesBreakByLowestIndex) {
  Eigen::MatrixXd m(3, 2);
  m << 1.5, -2.0, 1.5, -2.0, 1.5, -2.0;  // three identical points
  const auto nbs = nndm::build_neighborhoods(Dataset(m), 2);
  EXPECT_EQ(nbs[0].members, (std::vector<Eigen::Index>{0, 1}));
  EXPECT_EQ(nbs[1].members, (std::vector<Eigen::Index>{1, 0}));
  EXPECT_EQ(nbs[2].members, (std::vector<Eigen::Index>{2, 0}));
  EXPECT_DOUBLE_EQ(nbs[0].radius, 0.0);
}

TEST(Neighbors, MatchesBruteForceOracle) {
  nndm::Rng rng(101);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform01() * 180);
    const int p = 1 + trial % 3;
    const int k = 2 + static_cast<int>(rng.uniform01() * (n - 2));
    const Eigen::MatrixXd values = testutil::random_uniform_matrix(rng, n, p);
    const auto nbs = nndm::build_neighborhoods(Dataset(values), k);
    const auto oracle = brute_force_members(values, k);
    for (int i = 0; i < n; ++i)
      ASSERT_EQ(nbs[i].members, oracle[i]) << "n=" << n << " p=" << p << " k=" << k << " i=" << i;
  }
}

TEST(Neighbors, FixedCaseFromOracle) {
  // random n=50, p=3, k=10 against the full-sort oracle
  nndm::Rng rng(7);
  const Eigen::MatrixXd values = testutil::random_normal_matrix(rng, 50, 3);
  const auto nbs = nndm::build_neighborhoods(Dataset(values), 10);
  const auto oracle = brute_force_members(values, 10);
  for (int i = 0; i < 50; ++i) ASSERT_EQ(nbs[i].members, oracle[i]);
}

TEST(Neighbors, MeanScatterRadius) {
  Eigen::MatrixXd m(4, 2);
  m << 0, 0, 1, 0, 0, 1, 5, 5;
  const auto nbs = nndm::build_neighborhoods(Dataset(m), 3);
  // owner 0 with members {0, 1, 2}
  EXPECT_EQ(nbs[0].members, (std::vector<Eigen::Index>{0, 1, 2}));
  Eigen::VectorXd mean(2);
  mean << 1.0 / 3.0, 1.0 / 3.0;
  EXPECT_LT((nbs[0].mean - mean).norm(), 1e-14);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(2, 2);
  for (Eigen::Index j : nbs[0].members) {
    const Eigen::VectorXd d = m.row(j).transpose() - mean;
    scatter += d * d.transpose();
  }
  EXPECT_LT((nbs[0].scatter - scatter).norm(), 1e-13);
  EXPECT_DOUBLE_EQ(nbs[0].radius, 1.0);
}

TEST(Neighbors, ParameterErrors) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(5, 2);
  EXPECT_THROW(nndm::build_neighborhoods(Dataset(m), 1), nndm::invalid_parameter);
  EXPECT_THROW(nndm::build_neighborhoods(Dataset(m), 6), nndm::invalid_parameter);
  Eigen::MatrixXd bad = m;
  bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW((void)Dataset(bad), nndm::invalid_data);
  bad(2, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW((void)Dataset(bad), nndm::invalid_data);
}

TEST(Neighbors, PermutationStability) {
  nndm::Rng rng(13);
  const int n = 40, p = 2, k = 6;
  const Eigen::MatrixXd values = testutil::random_normal_matrix(rng, n, p);
  const auto base = nndm::build_neighborhoods(Dataset(values), k);

  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<int>(rng.uniform01() * (i + 1))]);
  Eigen::MatrixXd shuffled(n, p);
  for (int i = 0; i < n; ++i) shuffled.row(perm[i]) = values.row(i);

  const auto permuted = nndm::build_neighborhoods(Dataset(shuffled), k);
  for (int i = 0; i < n; ++i) {
    const Neighborhood& a = base[i];
    const Neighborhood& b = permuted[perm[i]];
    std::vector<Eigen::Index> mapped(b.members.size());
    for (std::size_t s = 0; s < b.members.size(); ++s) {
      const auto it = std::find(perm.begin(), perm.end(), b.members[s]);
      mapped[s] = it - perm.begin();
    }
    ASSERT_EQ(a.members, mapped);
    ASSERT_TRUE(a.mean == b.mean);        // bit-identical: same accumulation order
    ASSERT_TRUE(a.scatter == b.scatter);
  }
}

TEST(Neighbors, ScatterIsPsd) {
  nndm::Rng rng(19);
  const Eigen::MatrixXd values = testutil::random_normal_matrix(rng, 60, 4);
  for (int k : {2, 5, 20}) {
    for (const Neighborhood& nb : nndm::build_neighborhoods(Dataset(values), k)) {
      ASSERT_TRUE(nb.scatter.isApprox(nb.scatter.transpose()));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(nb.scatter);
      const double max_ev = eig.eigenvalues().maxCoeff();
      ASSERT_GE(eig.eigenvalues().minCoeff(), -1e-12 * std::max(max_ev, 1.0));
    }
  }
}

TEST(LooStatsTest, MatchesNaiveRecomputation) {
  nndm::Rng rng(29);
  const int n = 20, p = 2, k = 5;
  const Eigen::MatrixXd values = testutil::random_normal_matrix(rng, n, p);
  const LooStats loo(Dataset(values), k);
  Eigen::VectorXd mean(p), naive_mean(p);
  Eigen::MatrixXd scatter(p, p), naive_scatter(p, p);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      loo.stats_excluding(j, i, mean, scatter);
      naive_loo_stats(values, k, j, i, naive_mean, naive_scatter);
      ASSERT_LT((mean - naive_mean).lpNorm<Eigen::Infinity>(), 1e-10);
      ASSERT_LT((scatter - naive_scatter).lpNorm<Eigen::Infinity>(), 1e-10);
    }
}

TEST(LooStatsTest, DropLastWhenExcludedIsFar) {
  // excluding a point outside the base neighborhood must reduce to the
  // drop-last-member update
  Eigen::MatrixXd m(6, 1);
  m << 0, 1, 2, 3, 4, 100;
  const LooStats loo(Dataset(m), 4);
  ASSERT_FALSE(loo.base_contains(0, 5));
  Eigen::VectorXd mean(1);
  Eigen::MatrixXd scatter(1, 1);
  loo.stats_excluding(0, 5, mean, scatter);
  const auto& base = loo.base()[0];
  const double dropped = m(base.members.back(), 0);
  const double expect_mean = (5.0 * base.mean[0] - dropped) / 4.0;
  EXPECT_NEAR(mean[0], expect_mean, 1e-12);
}

TEST(LooStatsTest, HandCheckedIntegers) {
  // data {0,1,2,3,4,100}, k=4: all four cases worked out by hand
  Eigen::MatrixXd m(6, 1);
  m << 0, 1, 2, 3, 4, 100;
  const LooStats loo(Dataset(m), 4);
  Eigen::VectorXd mean(1);
  Eigen::MatrixXd scatter(1, 1);

  loo.stats_excluding(1, 0, mean, scatter);  // members {1,2,3,4}
  EXPECT_NEAR(mean[0], 2.5, 1e-12);
  EXPECT_NEAR(scatter(0, 0), 5.0, 1e-12);

  loo.stats_excluding(1, 5, mean, scatter);  // members {1,0,2,3}
  EXPECT_NEAR(mean[0], 1.5, 1e-12);
  EXPECT_NEAR(scatter(0, 0), 5.0, 1e-12);

  loo.stats_excluding(0, 5, mean, scatter);  // members {0,1,2,3}
  EXPECT_NEAR(mean[0], 1.5, 1e-12);
  EXPECT_NEAR(scatter(0, 0), 5.0, 1e-12);

  loo.stats_excluding(3, 0, mean, scatter);  // members {3,2,4,1}
  EXPECT_NEAR(mean[0], 2.5, 1e-12);
  EXPECT_NEAR(scatter(0, 0), 5.0, 1e-12);
}

TEST(LooStatsTest, PsdAndParameterErrors) {
  nndm::Rng rng(31);
  const Eigen::MatrixXd values = testutil::random_normal_matrix(rng, 15, 3);
  EXPECT_THROW(LooStats(Dataset(values), 15), nndm::invalid_parameter);
  const LooStats loo(Dataset(values), 6);
  Eigen::VectorXd mean(3);
  Eigen::MatrixXd scatter(3, 3);
  for (Eigen::Index j = 0; j < 15; ++j)
    for (Eigen::Index i = 0; i < 15; ++i) {
      if (i == j) continue;
      loo.stats_excluding(j, i, mean, scatter);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
      const double max_ev = std::max(eig.eigenvalues().maxCoeff(), 1.0);
      ASSERT_GE(eig.eigenvalues().minCoeff(), -1e-12 * max_ev);
    }
}

TEST(UniqueMembers, AllNeighborhoodsIdentical) {
  Eigen::MatrixXd m(5, 1);
  m << 0, 1, 2, 3, 4;
  const auto nbs = nndm::build_neighborhoods(Dataset(m), 5);  // k = n
  for (int v : nndm::count_unique_members(nbs)) EXPECT_EQ(v, 1);
}

TEST(UniqueMembers, EnumeratedSmallCase) {
  // {0, 1, 100}, k=2: S0={0,1}, S1={1,0}, S2={2,1}.
  // point 0 lies only in S0 and S1 -> unique member of S1;
  // point 1 lies in all three -> unique member of none.
  Eigen::MatrixXd m(3, 1);
  m << 0, 1, 100;
  const auto counts = nndm::count_unique_members(nndm::build_neighborhoods(Dataset(m), 2));
  EXPECT_EQ(counts, (std::vector<int>{1, 2, 1}));
}

TEST(UniqueMembers, MeanDecreasesTowardOne) {
  // iid standard normal, k = floor(n^{1/3}) + 1: the average count should
  // shrink toward 1 as n grows
  nndm::Rng rng(303);
  double prev = std::numeric_limits<double>::infinity();
  double last = 0.0;
  for (int n : {100, 400, 1600}) {
    const Eigen::MatrixXd values = testutil::random_normal_matrix(rng, n, 1);
    const int k = static_cast<int>(std::floor(std::cbrt(static_cast<double>(n)))) + 1;
    const auto counts = nndm::count_unique_members(nndm::build_neighborhoods(Dataset(values), k));
    double mean = 0.0;
    for (int v : counts) mean += v;
    mean /= n;
    ASSERT_GE(mean, 1.0);
    ASSERT_LT(mean, prev) << "n=" << n;
    prev = mean;
    last = mean;
  }
  EXPECT_LT(last, 1.35);
}
