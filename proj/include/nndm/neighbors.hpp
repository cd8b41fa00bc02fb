#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nndm/dataset.hpp"
#include "nndm/errors.hpp"
#include "nndm/parallel.hpp"

namespace nndm {

// k-nearest neighborhood of one observation. The owner is always the first
// member; the rest are ordered by increasing distance, ties broken by
// increasing row index.
struct Neighborhood {
  Eigen::Index owner = 0;
  std::vector<Eigen::Index> members;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;  // sum of centered outer products over members
  double radius = 0.0;      // distance to the k-th member
};

namespace detail {

// Indices of the m closest points to row `owner` (owner excluded), ordered by
// (squared distance, index). Distances are compared exactly; no epsilon.
inline void select_nearest(const Eigen::MatrixXd& values, Eigen::Index owner, int m,
                           const Eigen::VectorXd& sq_dist,
                           std::vector<std::pair<double, Eigen::Index>>& scratch,
                           std::vector<Eigen::Index>& out) {
  const Eigen::Index n = values.rows();
  scratch.clear();
  scratch.reserve(n - 1);
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != owner) scratch.emplace_back(sq_dist[j], j);
  auto mid = scratch.begin() + m;
  std::nth_element(scratch.begin(), mid - 1, scratch.end());
  std::sort(scratch.begin(), mid);
  out.resize(m);
  for (int j = 0; j < m; ++j) out[j] = scratch[j].second;
}

inline void finish_stats(const Eigen::MatrixXd& values, Neighborhood& nb) {
  const Eigen::Index p = values.cols();
  const auto k = static_cast<double>(nb.members.size());
  nb.mean = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j : nb.members) nb.mean += values.row(j).transpose();
  nb.mean /= k;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j : nb.members)
    acc.selfadjointView<Eigen::Lower>().rankUpdate(values.row(j).transpose() - nb.mean);
  nb.scatter = acc.selfadjointView<Eigen::Lower>();
}

}  // namespace detail

// Exact brute-force k-nearest-neighbor construction: each neighborhood is the
// owner plus its (k-1) nearest neighbors among the remaining rows.
inline std::vector<Neighborhood> build_neighborhoods(const Dataset& data, int k) {
  data.validate();
  const Eigen::Index n = data.n();
  if (k < 2 || k > n) throw invalid_parameter("build_neighborhoods: need 2 <= k <= n");

  std::vector<Neighborhood> result(n);
  parallel_for(n, [&](std::int64_t i) {
    const Eigen::VectorXd sq_dist =
        (data.values.rowwise() - data.values.row(i)).rowwise().squaredNorm();
    std::vector<std::pair<double, Eigen::Index>> scratch;
    std::vector<Eigen::Index> nearest;
    detail::select_nearest(data.values, i, k - 1, sq_dist, scratch, nearest);

    Neighborhood& nb = result[i];
    nb.owner = i;
    nb.members.reserve(k);
    nb.members.push_back(i);
    nb.members.insert(nb.members.end(), nearest.begin(), nearest.end());
    nb.radius = std::sqrt(sq_dist[nb.members.back()]);
    detail::finish_stats(data.values, nb);
  });
  return result;
}

// Leave-one-out statistics over (k+1)-neighborhoods of the full data.
// For any pair (j, i), i != j, exposes the mean and scatter of the k-member
// neighborhood of X_j within the data with X_i removed, obtained from the
// base statistics by dropping a single point:
//   drop X_i itself when X_i is a base member, else drop the (k+1)-th member.
class LooStats {
public:
  LooStats(const Dataset& data, int k) : values_(data.values), k_(k) {
    const Eigen::Index n = data.n();
    if (k < 2 || k + 1 > n) throw invalid_parameter("LooStats: need 2 <= k <= n-1");
    base_ = build_neighborhoods(data, k + 1);
    member_sorted_.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      member_sorted_[j] = base_[j].members;
      std::sort(member_sorted_[j].begin(), member_sorted_[j].end());
    }
  }

  int k() const { return k_; }
  Eigen::Index n() const { return values_.rows(); }
  const std::vector<Neighborhood>& base() const { return base_; }

  // Is X_i a member of the base (k+1)-neighborhood of X_j?
  bool base_contains(Eigen::Index j, Eigen::Index i) const {
    const auto& m = member_sorted_[j];
    return std::binary_search(m.begin(), m.end(), i);
  }

  // Mean and scatter of the k-neighborhood of X_j in the data without X_i.
  void stats_excluding(Eigen::Index j, Eigen::Index i, Eigen::VectorXd& mean,
                       Eigen::MatrixXd& scatter) const {
    const Neighborhood& nb = base_[j];
    const Eigen::Index drop = base_contains(j, i) ? i : nb.members.back();
    const double kp1 = static_cast<double>(k_) + 1.0;
    const Eigen::VectorXd dropped = values_.row(drop).transpose();
    mean = (kp1 * nb.mean - dropped) / k_;
    const Eigen::VectorXd diff = dropped - nb.mean;
    scatter = nb.scatter - (kp1 / k_) * (diff * diff.transpose());
  }

private:
  Eigen::MatrixXd values_;
  int k_;
  std::vector<Neighborhood> base_;
  std::vector<std::vector<Eigen::Index>> member_sorted_;
};

inline LooStats build_loo_stats(const Dataset& data, int k) { return LooStats(data, k); }

// N_i = 1 + number of points that belong to neighborhood i and to no other
// neighborhood except their own.
inline std::vector<int> count_unique_members(const std::vector<Neighborhood>& neighborhoods) {
  const auto n = static_cast<Eigen::Index>(neighborhoods.size());
  // owners_of[j]: how many neighborhoods contain j, and the last foreign owner
  std::vector<int> contain_count(n, 0);
  std::vector<Eigen::Index> foreign_owner(n, -1);
  for (const Neighborhood& nb : neighborhoods) {
    for (Eigen::Index j : nb.members) {
      ++contain_count[j];
      if (nb.owner != j) foreign_owner[j] = nb.owner;
    }
  }
  std::vector<int> unique_members(n, 1);
  for (Eigen::Index j = 0; j < n; ++j)
    if (contain_count[j] == 2 && foreign_owner[j] >= 0) ++unique_members[foreign_owner[j]];
  return unique_members;
}

}  // namespace nndm
