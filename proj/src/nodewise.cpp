#include "hdinfer/nodewise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdinfer/errors.hpp"
#include "hdinfer/parallel.hpp"
#include "hdinfer/rng.hpp"

namespace hdinfer {

NodewiseRegression nodewiseRegressionOnGram(const Eigen::MatrixXd& xtx, int j, double lambda_j,
                                            const LassoOptions& opts) {
  const int p = static_cast<int>(xtx.rows());
  if (p < 2) fail(ErrorCode::dimension_mismatch, "nodewise regression needs p >= 2");
  if (j < 0 || j >= p) fail(ErrorCode::group_out_of_range, "column index out of range");
  if (lambda_j <= 0.0) fail(ErrorCode::invalid_argument, "lambda_j must be positive");

  GramProblem prob;
  prob.xtx = &xtx;
  prob.xty = xtx.col(j);
  prob.yty = xtx(j, j);
  prob.exclude = j;

  NodewiseRegression out;
  out.fit = lasso_gram(prob, lambda_j, opts);
  const Eigen::VectorXd& gamma = out.fit.beta;

  // rss/n = yty - 2 b'g + g'Ag, evaluated through the sparse support.
  double cross = 0.0;
  double l1 = 0.0;
  for (int k : out.fit.active_set) {
    cross += prob.xty[k] * gamma[k];
    l1 += std::fabs(gamma[k]);
    out.gamma.emplace_back(k, gamma[k]);
  }
  double quad = 0.0;
  for (int k : out.fit.active_set) {
    double acc = 0.0;
    for (int l : out.fit.active_set) acc += xtx(k, l) * gamma[l];
    quad += gamma[k] * acc;
  }
  const double rss_n = std::max(prob.yty - 2.0 * cross + quad, 0.0);
  out.tau_sq = rss_n + lambda_j * l1;
  if (out.tau_sq < 1e-12)
    fail(ErrorCode::degenerate_tau,
         "column " + std::to_string(j) + " is (near) perfectly explained by the others");
  return out;
}

NodewiseRegression nodewise_regression(const Eigen::MatrixXd& xtx, int j, double lambda_j,
                                       const LassoOptions& opts) {
  return nodewiseRegressionOnGram(xtx, j, lambda_j, opts);
}

PrecisionEstimate precision_estimate_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& lambdas,
                                            const LassoOptions& opts) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (lambdas.size() != p) fail(ErrorCode::dimension_mismatch, "need one lambda per column");
  const Eigen::MatrixXd xtx = X.transpose() * X / n;

  PrecisionEstimate est;
  est.theta = Eigen::MatrixXd::Zero(p, p);
  est.tau_sq.resize(p);
  est.lambdas = lambdas;
  est.gamma_hats.resize(p);

  std::vector<std::string> failures(p);
  parallel_for(0, static_cast<std::size_t>(p), [&](std::size_t idx) {
    const int j = static_cast<int>(idx);
    try {
      const NodewiseRegression reg = nodewiseRegressionOnGram(xtx, j, lambdas[j], opts);
      est.tau_sq[j] = reg.tau_sq;
      est.theta(j, j) = 1.0 / reg.tau_sq;
      for (const auto& [k, v] : reg.gamma) est.theta(j, k) = -v / reg.tau_sq;
      est.gamma_hats[j] = reg.gamma;
    } catch (const Error& e) {
      failures[j] = e.what();
    }
  });

  std::string combined;
  for (int j = 0; j < p; ++j)
    if (!failures[j].empty())
      combined += (combined.empty() ? "" : "; ") + ("column " + std::to_string(j) + ": " + failures[j]);
  if (!combined.empty()) fail(ErrorCode::degenerate_tau, "nodewise failures: " + combined);

  // KKT consequence of the construction: |(Theta Sigma)_{jj} - 1| <= lambda_j / tau_sq_j.
  for (int j = 0; j < p; ++j) {
    const double diag = est.theta.row(j).dot(xtx.col(j));
    if (std::fabs(diag - 1.0) > lambdas[j] / est.tau_sq[j] + 1e-8)
      fail(ErrorCode::internal, "nodewise diagonal bound violated at column " + std::to_string(j));
  }
  return est;
}

PrecisionEstimate precision_estimate(const Dataset& data, const Eigen::VectorXd& lambdas,
                                     const LassoOptions& opts) {
  validate_dataset(data);
  if (!data.standardized)
    fail(ErrorCode::invalid_argument, "precision_estimate requires a standardized dataset");
  return precision_estimate_matrix(data.X, lambdas, opts);
}

PrecisionEstimate precision_estimate(const Dataset& data, double shared_lambda,
                                     const LassoOptions& opts) {
  return precision_estimate(data, Eigen::VectorXd::Constant(data.p(), shared_lambda), opts);
}

std::vector<double> nodewise_default_grid(const Eigen::MatrixXd& xtx, int size, double min_ratio) {
  const int p = static_cast<int>(xtx.rows());
  double lambda_max = 0.0;
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) lambda_max = std::max(lambda_max, std::fabs(xtx(j, k)));
  if (lambda_max <= 0.0) lambda_max = 1.0;  // orthogonal design: any grid selects gamma = 0
  return log_spaced_grid(lambda_max, min_ratio, size);
}

std::pair<double, std::vector<double>> shared_cv_lambda_nodewise(const Eigen::MatrixXd& X,
                                                                 std::uint64_t seed,
                                                                 const SharedCvOptions& cv,
                                                                 const LassoOptions& opts) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (p < 2) fail(ErrorCode::dimension_mismatch, "need p >= 2");
  const int folds = cv.folds;
  if (folds < 2 || folds > n) fail(ErrorCode::invalid_argument, "bad fold count");

  const Eigen::MatrixXd xtx_full = X.transpose() * X / n;
  const std::vector<double> grid = nodewise_default_grid(xtx_full, cv.grid_size, cv.grid_min_ratio);

  // Column subsample for the averaged error curve.
  std::vector<int> cols(p);
  for (int j = 0; j < p; ++j) cols[j] = j;
  const int m = std::min(p, std::max(1, cv.subsample_columns));
  if (m < p) {
    RngStream rng(derive_seed(seed, rng_tag::column_subsample), 0);
    for (int i = 0; i < m; ++i)
      std::swap(cols[i], cols[i + rng.uniform_index(static_cast<std::uint64_t>(p - i))]);
    cols.resize(m);
    std::sort(cols.begin(), cols.end());
  }

  const std::vector<int> fold = cv_fold_assignment(n, folds, seed);

  // Per-fold Gram matrices; every column regression reuses them.
  std::vector<Eigen::MatrixXd> held_gram(folds);  // X_f' X_f (unnormalized)
  std::vector<Eigen::MatrixXd> train_gram(folds); // X_tr' X_tr / n_tr
  std::vector<int> train_count(folds);
  for (int f = 0; f < folds; ++f) {
    int nf = 0;
    for (int i = 0; i < n; ++i)
      if (fold[i] == f) ++nf;
    Eigen::MatrixXd Xf(nf, p);
    int r = 0;
    for (int i = 0; i < n; ++i)
      if (fold[i] == f) Xf.row(r++) = X.row(i);
    held_gram[f] = Xf.transpose() * Xf;
    train_count[f] = n - nf;
    train_gram[f] = (xtx_full * n - held_gram[f]) / std::max(train_count[f], 1);
  }

  // err(j, g): held-out SSE for column j at grid point g, summed over folds.
  std::vector<std::vector<double>> err(cols.size(), std::vector<double>(grid.size(), 0.0));
  parallel_for(0, cols.size(), [&](std::size_t ci) {
    const int j = cols[ci];
    for (int f = 0; f < folds; ++f) {
      if (train_count[f] < 1) continue;
      GramProblem prob;
      prob.xtx = &train_gram[f];
      prob.xty = train_gram[f].col(j);
      prob.yty = train_gram[f](j, j);
      prob.exclude = j;

      Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const LassoFit fit = lasso_gram(prob, grid[g], opts, &warm);
        warm = fit.beta;
        // ||X_{f,j} - X_{f,-j} gamma||^2 through the held-out Gram.
        const Eigen::MatrixXd& H = held_gram[f];
        double sse = H(j, j);
        for (int k : fit.active_set) sse -= 2.0 * H(k, j) * fit.beta[k];
        for (int k : fit.active_set) {
          double acc = 0.0;
          for (int l : fit.active_set) acc += H(k, l) * fit.beta[l];
          sse += fit.beta[k] * acc;
        }
        err[ci][g] += std::max(sse, 0.0);
      }
    }
  });

  std::vector<double> curve(grid.size(), 0.0);
  for (std::size_t ci = 0; ci < cols.size(); ++ci)
    for (std::size_t g = 0; g < grid.size(); ++g) curve[g] += err[ci][g];

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (curve[g] < curve[best]) best = g;
  return {grid[best], grid};
}

}  // namespace hdinfer
