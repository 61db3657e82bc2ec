#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hdinfer/dataset.hpp"

namespace hdinfer {

struct LassoOptions {
  double cd_tol = 1e-8;    // max coefficient change per full sweep
  int max_sweeps = 10000;
  double kkt_tol = 1e-6;
  int gram_threshold = 2000;  // use covariance updates when p <= this
};

/// Solution of min ||Y - X b||_2^2/n + 2*lambda*||b||_1.
struct LassoFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  std::vector<int> active_set;  // {j : beta_j != 0}, ascending
  double objective = 0.0;
  int iterations = 0;  // full sweeps
  bool converged = false;
};

// Gram-form view of the least-squares objective:
//   f(b) = yty - 2 xty'b + b' xtx b + 2*lambda*||b||_1,
// with xtx = X'X/n, xty = X'Y/n, yty = Y'Y/n. `exclude` forces one
// coordinate to zero (nodewise regressions reuse the full Gram this way).
struct GramProblem {
  const Eigen::MatrixXd* xtx = nullptr;
  Eigen::VectorXd xty;
  double yty = 0.0;
  int exclude = -1;
};

/// Cyclic coordinate descent on the Gram form.
LassoFit lasso_gram(const GramProblem& prob, double lambda, const LassoOptions& opts = {},
                    const Eigen::VectorXd* warm_start = nullptr);

LassoFit lasso_fit(const Dataset& data, double lambda, const LassoOptions& opts = {},
                   const Eigen::VectorXd* warm_start = nullptr);

/// KKT residual check; returns max violation of |X'(Y-Xb)/n| <= lambda
/// (with sign/equality agreement on the active set).
double kkt_violation(const GramProblem& prob, const LassoFit& fit, double lambda);

/// Universal scaled-Lasso tuning constant sqrt(2) * n^{-1/2} * Phi^{-1}(1 - k0/p).
double universal_lambda0(int n, int p);

struct ScaledLassoFit {
  Eigen::VectorXd beta_sc;
  double sigma_hat = 0.0;           // noise level from the joint iteration
  double sigma_hat_modified = 0.0;  // degrees-of-freedom corrected estimate
  double lambda0 = 0.0;
  int df = 0;  // ||beta_sc||_0
  LassoFit fit;
};

// Alternates a Lasso step at penalty sigma*lambda0 with the variance update
// sigma^2 <- ||Y - X b||_2^2 / n until sigma stabilizes.
ScaledLassoFit scaled_lasso_fit(const Dataset& data, double lambda0,
                                const LassoOptions& opts = {});

/// Gram-form scaled Lasso for callers that fix X across many responses.
ScaledLassoFit scaled_lasso_gram(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty,
                                 double yty, int n, double lambda0,
                                 const LassoOptions& opts = {});

/// 10-fold style cross-validation for the Lasso penalty on a descending grid.
double cv_lambda(const Dataset& data, const std::vector<double>& grid, int folds,
                 std::uint64_t seed, const LassoOptions& opts = {});

/// Seeded near-equal partition of {0..n-1} into `folds` blocks; returns fold ids.
std::vector<int> cv_fold_assignment(int n, int folds, std::uint64_t seed);

/// Descending log-spaced grid from lambda_max down to ratio*lambda_max.
std::vector<double> log_spaced_grid(double lambda_max, double min_ratio, int size);

}  // namespace hdinfer
