#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "colmp/error.hpp"

namespace colmp {

/// Per-column affine map to zero mean and unit population variance. Constant
/// columns keep scale 1 so they map to zero instead of dividing by zero.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x) {
    if (x.rows() < 1) throw Error(ErrorCode::InsufficientRows, "cannot standardize an empty matrix");
    Standardizer s;
    s.mean = x.colwise().mean();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.mean(j)).square().mean();
      s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  static Standardizer identity(Eigen::Index dim) {
    return {Eigen::RowVectorXd::Zero(dim), Eigen::RowVectorXd::Ones(dim)};
  }

  Eigen::Index dim() const { return mean.size(); }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(dim()) + " columns, got " + std::to_string(x.cols()));
    }
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }

  Eigen::RowVectorXd apply_row(const Eigen::RowVectorXd& x) const { return apply(Eigen::MatrixXd(x)).row(0); }
};

}  // namespace colmp
