#pragma once

#include <Eigen/Dense>

namespace hdinfer {

/// Regression data: response Y and n x p design X, with standardization
/// bookkeeping so callers can map coefficients back to the original scale.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  bool standardized = false;
  Eigen::VectorXd column_means;  // original-scale column means
  Eigen::VectorXd column_sds;    // original-scale column sds (1/n convention)

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

/// Rejects non-finite entries and bad shapes (n >= 2, p >= 1, len(Y) == n).
void validate_dataset(const Dataset& data);

// Centers and rescales each column of X to sample mean 0 and sd 1
// (sd with denominator n). Y is centered but not rescaled. Idempotent on
// already-standardized input up to floating error.
Dataset standardize(const Dataset& data);

/// True when every column mean is within tol of 0 and every sd within tol of 1.
bool is_standardized(const Eigen::MatrixXd& X, double tol = 1e-10);

}  // namespace hdinfer
