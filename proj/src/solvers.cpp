#include "hdinfer/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdinfer/errors.hpp"
#include "hdinfer/rng.hpp"
#include "hdinfer/stats.hpp"

namespace hdinfer {

namespace {

inline double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

std::vector<int> nonzero_indices(const Eigen::VectorXd& beta) {
  std::vector<int> act;
  for (int j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) act.push_back(j);
  return act;
}

// One cyclic pass over the given coordinates. Maintains grad = xty - xtx*beta
// and the running objective; returns the max coefficient change.
double cd_pass(const Eigen::MatrixXd& A, int exclude, double lambda, const std::vector<int>& order,
               Eigen::VectorXd& beta, Eigen::VectorXd& grad, double& objective) {
  double max_change = 0.0;
  for (int j : order) {
    if (j == exclude) continue;
    const double ajj = A(j, j);
    if (ajj <= 0.0) continue;  // degenerate coordinate, leave at current value
    const double old = beta[j];
    const double z = grad[j] + ajj * old;
    const double next = soft_threshold(z, lambda) / ajj;
    const double delta = next - old;
    if (delta != 0.0) {
      // Exact single-coordinate objective change; must never increase.
      const double dobj = ajj * (next * next - old * old) - 2.0 * z * delta +
                          2.0 * lambda * (std::fabs(next) - std::fabs(old));
      if (dobj > 1e-10 * std::max(1.0, std::fabs(objective)))
        fail(ErrorCode::internal, "coordinate descent objective increased");
      objective += dobj;
      grad.noalias() -= A.col(j) * delta;
      beta[j] = next;
      max_change = std::max(max_change, std::fabs(delta));
    }
  }
  return max_change;
}

}  // namespace

LassoFit lasso_gram(const GramProblem& prob, double lambda, const LassoOptions& opts,
                    const Eigen::VectorXd* warm_start) {
  const Eigen::MatrixXd& A = *prob.xtx;
  const int p = static_cast<int>(A.rows());
  if (lambda < 0.0) fail(ErrorCode::invalid_argument, "lambda must be nonnegative");

  LassoFit fit;
  fit.lambda = lambda;
  fit.beta = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
  if (warm_start && warm_start->size() != p)
    fail(ErrorCode::dimension_mismatch, "warm start has wrong length");
  if (prob.exclude >= 0) fit.beta[prob.exclude] = 0.0;

  Eigen::VectorXd grad = prob.xty - A * fit.beta;
  double objective = prob.yty - 2.0 * prob.xty.dot(fit.beta) +
                     fit.beta.dot(prob.xty - grad) + 2.0 * lambda * fit.beta.lpNorm<1>();

  std::vector<int> all(p);
  for (int j = 0; j < p; ++j) all[j] = j;

  int sweeps = 0;
  bool converged = false;
  while (sweeps < opts.max_sweeps) {
    const double change = cd_pass(A, prob.exclude, lambda, all, fit.beta, grad, objective);
    ++sweeps;
    if (change < opts.cd_tol) {
      converged = true;
      break;
    }
    // Inner iterations on the active set until stable, then re-verify with
    // a full pass. Inner passes are bounded to keep the sweep count honest.
    std::vector<int> active = nonzero_indices(fit.beta);
    for (int inner = 0; inner < 100 && !active.empty(); ++inner) {
      if (cd_pass(A, prob.exclude, lambda, active, fit.beta, grad, objective) < opts.cd_tol)
        break;
    }
  }

  // Refresh the gradient to wash out drift before the KKT check.
  grad.noalias() = prob.xty - A * fit.beta;
  double viol = 0.0;
  for (int j = 0; j < p; ++j) {
    if (j == prob.exclude) continue;
    if (fit.beta[j] != 0.0)
      viol = std::max(viol, std::fabs(grad[j] - lambda * (fit.beta[j] > 0 ? 1.0 : -1.0)));
    else
      viol = std::max(viol, std::fabs(grad[j]) - lambda);
  }
  if (viol > opts.kkt_tol && converged && sweeps < opts.max_sweeps) {
    // Tolerances interact on hard problems; keep sweeping on the exact
    // gradient until the KKT residual clears.
    while (viol > opts.kkt_tol && sweeps < opts.max_sweeps) {
      cd_pass(A, prob.exclude, lambda, all, fit.beta, grad, objective);
      ++sweeps;
      grad.noalias() = prob.xty - A * fit.beta;
      viol = kkt_violation(prob, fit, lambda);
    }
  }

  fit.iterations = sweeps;
  fit.converged = converged && viol <= opts.kkt_tol;
  fit.active_set = nonzero_indices(fit.beta);
  fit.objective = prob.yty - 2.0 * prob.xty.dot(fit.beta) + fit.beta.dot(A * fit.beta) +
                  2.0 * lambda * fit.beta.lpNorm<1>();
  return fit;
}

double kkt_violation(const GramProblem& prob, const LassoFit& fit, double lambda) {
  const Eigen::VectorXd grad = prob.xty - (*prob.xtx) * fit.beta;
  double viol = 0.0;
  for (int j = 0; j < grad.size(); ++j) {
    if (j == prob.exclude) continue;
    if (fit.beta[j] != 0.0)
      viol = std::max(viol, std::fabs(grad[j] - lambda * (fit.beta[j] > 0 ? 1.0 : -1.0)));
    else
      viol = std::max(viol, std::fabs(grad[j]) - lambda);
  }
  return viol;
}

namespace {

// Residual-update coordinate descent for wide problems where the Gram matrix
// is not worth forming.
LassoFit lasso_naive(const Dataset& data, double lambda, const LassoOptions& opts,
                     const Eigen::VectorXd* warm_start) {
  const int n = data.n();
  const int p = data.p();
  LassoFit fit;
  fit.lambda = lambda;
  fit.beta = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);

  Eigen::VectorXd col_sq(p);
  for (int j = 0; j < p; ++j) col_sq[j] = data.X.col(j).squaredNorm() / n;

  Eigen::VectorXd resid = data.Y - data.X * fit.beta;
  double objective = resid.squaredNorm() / n + 2.0 * lambda * fit.beta.lpNorm<1>();

  int sweeps = 0;
  bool converged = false;
  while (sweeps < opts.max_sweeps) {
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      const double ajj = col_sq[j];
      if (ajj <= 0.0) continue;
      const double old = fit.beta[j];
      const double z = data.X.col(j).dot(resid) / n + ajj * old;
      const double next = soft_threshold(z, lambda) / ajj;
      const double delta = next - old;
      if (delta != 0.0) {
        const double dobj = ajj * (next * next - old * old) - 2.0 * z * delta +
                            2.0 * lambda * (std::fabs(next) - std::fabs(old));
        if (dobj > 1e-10 * std::max(1.0, std::fabs(objective)))
          fail(ErrorCode::internal, "coordinate descent objective increased");
        objective += dobj;
        resid.noalias() -= data.X.col(j) * delta;
        fit.beta[j] = next;
        max_change = std::max(max_change, std::fabs(delta));
      }
    }
    ++sweeps;
    if (max_change < opts.cd_tol) {
      converged = true;
      break;
    }
  }

  resid = data.Y - data.X * fit.beta;
  double viol = 0.0;
  const Eigen::VectorXd grad = data.X.transpose() * resid / n;
  for (int j = 0; j < p; ++j) {
    if (fit.beta[j] != 0.0)
      viol = std::max(viol, std::fabs(grad[j] - lambda * (fit.beta[j] > 0 ? 1.0 : -1.0)));
    else
      viol = std::max(viol, std::fabs(grad[j]) - lambda);
  }
  fit.iterations = sweeps;
  fit.converged = converged && viol <= opts.kkt_tol;
  fit.active_set = nonzero_indices(fit.beta);
  fit.objective = resid.squaredNorm() / n + 2.0 * lambda * fit.beta.lpNorm<1>();
  return fit;
}

}  // namespace

LassoFit lasso_fit(const Dataset& data, double lambda, const LassoOptions& opts,
                   const Eigen::VectorXd* warm_start) {
  validate_dataset(data);
  if (lambda < 0.0) fail(ErrorCode::invalid_argument, "lambda must be nonnegative");
  const int n = data.n();
  const int p = data.p();

  if (lambda == 0.0) {
    if (p > n)
      fail(ErrorCode::underdetermined, "lambda = 0 requires p <= n (p=" + std::to_string(p) +
                                           ", n=" + std::to_string(n) + ")");
    // Unpenalized: solve the normal equations densely.
    const Eigen::MatrixXd xtx = data.X.transpose() * data.X / n;
    const Eigen::VectorXd xty = data.X.transpose() * data.Y / n;
    LassoFit fit;
    fit.lambda = 0.0;
    fit.beta = xtx.ldlt().solve(xty);
    if (!fit.beta.allFinite())
      fail(ErrorCode::not_positive_definite, "normal equations are singular");
    fit.active_set = nonzero_indices(fit.beta);
    fit.objective = (data.Y - data.X * fit.beta).squaredNorm() / n;
    fit.iterations = 1;
    fit.converged = true;
    return fit;
  }

  if (p <= opts.gram_threshold) {
    const Eigen::MatrixXd xtx = data.X.transpose() * data.X / n;
    GramProblem prob;
    prob.xtx = &xtx;
    prob.xty = data.X.transpose() * data.Y / n;
    prob.yty = data.Y.squaredNorm() / n;
    return lasso_gram(prob, lambda, opts, warm_start);
  }
  return lasso_naive(data, lambda, opts, warm_start);
}

double universal_lambda0(int n, int p) {
  if (p < 2 || n < 1) fail(ErrorCode::invalid_argument, "universal_lambda0 needs p >= 2, n >= 1");
  const double pd = static_cast<double>(p);
  const auto step = [pd](double k) {
    const double t = std::min(std::max(k / pd, 1e-14), 1.0 - 1e-14);
    const double L = normal_quantile(1.0 - t);
    const double L2 = L * L;
    return L2 * L2 + 2.0 * L2;
  };

  double k = 1.0;
  bool converged = false;
  for (int it = 0; it < 500; ++it) {
    double next = 0.5 * k + 0.5 * step(k);
    next = std::min(std::max(next, 1e-12), pd * (1.0 - 1e-12));
    if (std::fabs(next - k) < 1e-10) {
      k = next;
      converged = true;
      break;
    }
    k = next;
  }
  if (!converged) {
    // Damped iteration can cycle for very small p; h(k) = k - step(k) is
    // strictly increasing, so fall back to bisection.
    double lo = 1e-12, hi = pd * (1.0 - 1e-12);
    if (lo - step(lo) < 0.0 && hi - step(hi) > 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mid - step(mid) > 0.0 ? hi : lo) = mid;
      }
      k = 0.5 * (lo + hi);
      converged = std::fabs(k - step(k)) < 1e-8;
    }
  }
  if (!converged)
    fail(ErrorCode::no_fixed_point,
         "tuning constant iteration did not converge; last iterate k=" + std::to_string(k));
  return std::sqrt(2.0 / n) * normal_quantile(1.0 - k / pd);
}

ScaledLassoFit scaled_lasso_gram(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty,
                                 double yty, int n, double lambda0, const LassoOptions& opts) {
  if (lambda0 <= 0.0) fail(ErrorCode::invalid_argument, "lambda0 must be positive");
  GramProblem prob;
  prob.xtx = &xtx;
  prob.xty = xty;
  prob.yty = yty;

  if (yty < 1e-12) fail(ErrorCode::degenerate_variance, "response has (near) zero variance");
  double sigma = std::sqrt(yty);

  LassoFit fit;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(xtx.rows());
  for (int it = 0; it < 100; ++it) {
    fit = lasso_gram(prob, sigma * lambda0, opts, &warm);
    warm = fit.beta;
    const double rss_n =
        std::max(yty - 2.0 * xty.dot(fit.beta) + fit.beta.dot(xtx * fit.beta), 0.0);
    if (rss_n < 1e-12) fail(ErrorCode::degenerate_variance, "residual variance collapsed");
    const double sigma_new = std::sqrt(rss_n);
    const bool done = std::fabs(sigma_new - sigma) < 1e-8;
    sigma = sigma_new;
    if (done) break;
  }

  ScaledLassoFit out;
  out.beta_sc = fit.beta;
  out.sigma_hat = sigma;
  out.lambda0 = lambda0;
  out.df = static_cast<int>(fit.active_set.size());
  if (out.df >= n)
    fail(ErrorCode::saturated_fit, "active set size " + std::to_string(out.df) +
                                       " leaves no residual degrees of freedom");
  const double rss_n =
      std::max(yty - 2.0 * xty.dot(fit.beta) + fit.beta.dot(xtx * fit.beta), 0.0);
  out.sigma_hat_modified = std::sqrt(rss_n * n / (n - out.df));
  out.fit = std::move(fit);
  return out;
}

ScaledLassoFit scaled_lasso_fit(const Dataset& data, double lambda0, const LassoOptions& opts) {
  validate_dataset(data);
  if (!data.standardized)
    fail(ErrorCode::invalid_argument, "scaled_lasso_fit requires a standardized dataset");

  const int n = data.n();
  const Eigen::MatrixXd xtx = data.X.transpose() * data.X / n;
  const Eigen::VectorXd xty = data.X.transpose() * data.Y / n;
  ScaledLassoFit out =
      scaled_lasso_gram(xtx, xty, data.Y.squaredNorm() / n, n, lambda0, opts);
  // Recompute the corrected noise level from the residuals themselves.
  const double rss = (data.Y - data.X * out.beta_sc).squaredNorm();
  out.sigma_hat_modified = std::sqrt(rss / (n - out.df));
  return out;
}

std::vector<int> cv_fold_assignment(int n, int folds, std::uint64_t seed) {
  if (folds < 2) fail(ErrorCode::invalid_argument, "need at least 2 folds");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  RngStream rng(derive_seed(seed, rng_tag::cv_folds), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
  std::vector<int> fold(n);
  for (int i = 0; i < n; ++i) fold[perm[i]] = i % folds;
  return fold;
}

std::vector<double> log_spaced_grid(double lambda_max, double min_ratio, int size) {
  if (lambda_max <= 0.0 || min_ratio <= 0.0 || min_ratio > 1.0 || size < 1)
    fail(ErrorCode::invalid_argument, "bad grid specification");
  std::vector<double> grid(size);
  if (size == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * min_ratio);
  for (int i = 0; i < size; ++i)
    grid[i] = std::exp(log_max + (log_min - log_max) * i / (size - 1));
  return grid;
}

double cv_lambda(const Dataset& data, const std::vector<double>& grid, int folds,
                 std::uint64_t seed, const LassoOptions& opts) {
  validate_dataset(data);
  if (grid.empty()) fail(ErrorCode::invalid_argument, "empty lambda grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] >= grid[i - 1]) fail(ErrorCode::invalid_argument, "grid must be sorted descending");
  if (folds < 2) fail(ErrorCode::invalid_argument, "need at least 2 folds");

  const int n = data.n();
  const std::vector<int> fold = cv_fold_assignment(n, folds, seed);

  std::vector<double> sse(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> test_rows, train_rows;
    for (int i = 0; i < n; ++i) (fold[i] == f ? test_rows : train_rows).push_back(i);
    if (train_rows.empty() || test_rows.empty()) continue;

    const int nt = static_cast<int>(train_rows.size());
    Eigen::MatrixXd Xtr(nt, data.p());
    Eigen::VectorXd Ytr(nt);
    for (int i = 0; i < nt; ++i) {
      Xtr.row(i) = data.X.row(train_rows[i]);
      Ytr[i] = data.Y[train_rows[i]];
    }
    const Eigen::MatrixXd xtx = Xtr.transpose() * Xtr / nt;
    GramProblem prob;
    prob.xtx = &xtx;
    prob.xty = Xtr.transpose() * Ytr / nt;
    prob.yty = Ytr.squaredNorm() / nt;

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(data.p());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const LassoFit fit = lasso_gram(prob, grid[g], opts, &warm);
      warm = fit.beta;
      for (int row : test_rows) {
        const double pred = data.X.row(row).dot(fit.beta);
        const double err = data.Y[row] - pred;
        sse[g] += err * err;
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (sse[g] < sse[best]) best = g;  // ties keep the earlier (larger) lambda
  return grid[best];
}

}  // namespace hdinfer
