#pragma once

#include <utility>

#include <Eigen/Core>

#include "nndm/errors.hpp"

namespace nndm {

// Observation matrix, one row per sample.
struct Dataset {
  Eigen::MatrixXd values;

  Dataset() = default;
  explicit Dataset(Eigen::MatrixXd m) : values(std::move(m)) { validate(); }

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }

  Eigen::VectorXd row(Eigen::Index i) const { return values.row(i).transpose(); }

  void validate() const {
    if (values.rows() < 1 || values.cols() < 1)
      throw invalid_data("dataset must have at least one row and one column");
    if (!values.allFinite()) throw invalid_data("dataset contains non-finite entries");
  }
};

}  // namespace nndm
