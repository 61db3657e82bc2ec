#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hdinfer/dataset.hpp"
#include "hdinfer/solvers.hpp"

namespace hdinfer {

// Relaxed inverse of the Gram matrix built from per-column Lasso regressions:
// row j solves min ||X_j - X_{-j} g||_2^2/n + 2*lambda_j*||g||_1, and
//   theta(j,j) = 1/tau_sq_j,  theta(j,k) = -gamma_{j,k}/tau_sq_j.
// theta is generally asymmetric.
struct PrecisionEstimate {
  Eigen::MatrixXd theta;   // p x p, row j = Theta_j
  Eigen::VectorXd tau_sq;  // p, residual scales
  Eigen::VectorXd lambdas; // p, per-column penalties
  std::vector<std::vector<std::pair<int, double>>> gamma_hats;  // nonzeros, full-p indices

  int p() const { return static_cast<int>(theta.rows()); }
};

struct NodewiseRegression {
  std::vector<std::pair<int, double>> gamma;  // nonzeros in full-p indexing
  double tau_sq = 0.0;
  LassoFit fit;
};

/// One column regression on a precomputed Gram matrix xtx = X'X/n.
NodewiseRegression nodewise_regression(const Eigen::MatrixXd& xtx, int j, double lambda_j,
                                       const LassoOptions& opts = {});

PrecisionEstimate precision_estimate(const Dataset& data, const Eigen::VectorXd& lambdas,
                                     const LassoOptions& opts = {});
PrecisionEstimate precision_estimate(const Dataset& data, double shared_lambda,
                                     const LassoOptions& opts = {});

/// Matrix-level variant (no standardization requirement); used for weighted designs.
PrecisionEstimate precision_estimate_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& lambdas,
                                            const LassoOptions& opts = {});

struct SharedCvOptions {
  int folds = 10;
  int grid_size = 50;
  double grid_min_ratio = 0.01;
  int subsample_columns = 50;  // average CV curves over at most this many columns
};

// One penalty shared by all p column regressions: per-column CV error curves
// on a common grid are averaged (over a seeded column subsample when p is
// large) and the minimizer of the averaged curve wins; ties go to the larger
// lambda. Returns {lambda, grid}.
std::pair<double, std::vector<double>> shared_cv_lambda_nodewise(
    const Eigen::MatrixXd& X, std::uint64_t seed, const SharedCvOptions& cv = {},
    const LassoOptions& opts = {});

/// Default nodewise grid: 50 log-spaced points down from max_{j!=k} |X_k'X_j|/n.
std::vector<double> nodewise_default_grid(const Eigen::MatrixXd& xtx, int size = 50,
                                          double min_ratio = 0.01);

}  // namespace hdinfer
