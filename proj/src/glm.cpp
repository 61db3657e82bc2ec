#include "hdinfer/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hdinfer/errors.hpp"

namespace hdinfer {

LossSpec logistic_loss() {
  LossSpec spec;
  spec.name = "logistic";
  spec.loss = [](double y, double a) {
    // -y*a + log(1 + e^a) = -y*a + max(a,0) + log1p(e^{-|a|})
    return -y * a + std::max(a, 0.0) + std::log1p(std::exp(-std::fabs(a)));
  };
  spec.dloss = [](double y, double a) {
    const double s = a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
    return -y + s;
  };
  spec.d2loss = [](double, double a) {
    const double t = std::exp(-std::fabs(a));
    const double d = 1.0 + t;
    return t / (d * d);
  };
  return spec;
}

LossSpec squared_loss() {
  LossSpec spec;
  spec.name = "squared";
  spec.loss = [](double y, double a) { return 0.5 * (y - a) * (y - a); };
  spec.dloss = [](double y, double a) { return a - y; };
  spec.d2loss = [](double, double) { return 1.0; };
  return spec;
}

namespace {

inline double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double mean_loss(const Dataset& data, const LossSpec& loss, const Eigen::VectorXd& beta,
                 Eigen::VectorXd& lin) {
  lin.noalias() = data.X * beta;
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) total += loss.loss(data.Y[i], lin[i]);
  return total / data.n();
}

Eigen::VectorXd smooth_gradient(const Dataset& data, const LossSpec& loss,
                                const Eigen::VectorXd& lin) {
  Eigen::VectorXd d(data.n());
  for (int i = 0; i < data.n(); ++i) d[i] = loss.dloss(data.Y[i], lin[i]);
  return data.X.transpose() * d / data.n();
}

double subgradient_residual(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                            double lambda) {
  double viol = 0.0;
  for (int j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0)
      viol = std::max(viol, std::fabs(grad[j] + lambda * (beta[j] > 0 ? 1.0 : -1.0)));
    else
      viol = std::max(viol, std::max(std::fabs(grad[j]) - lambda, 0.0));
  }
  return viol;
}

}  // namespace

GlmFit glm_lasso_fit(const Dataset& data, const LossSpec& loss, double lambda,
                     const GlmOptions& opts) {
  validate_dataset(data);
  if (lambda < 0.0) fail(ErrorCode::invalid_argument, "lambda must be nonnegative");
  const int p = data.p();

  GlmFit fit;
  fit.lambda = lambda;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);      // current iterate
  Eigen::VectorXd z = x;                             // momentum point
  Eigen::VectorXd lin(data.n());
  double fx = mean_loss(data, loss, x, lin);
  double obj_x = fx + lambda * x.lpNorm<1>();
  double t_mom = 1.0;
  double step = 1.0;
  Eigen::VectorXd grad(p), cand(p), lin_c(data.n());

  int it = 0;
  bool converged = false;
  for (; it < opts.max_iter; ++it) {
    lin.noalias() = data.X * z;
    double fz = 0.0;
    for (int i = 0; i < data.n(); ++i) fz += loss.loss(data.Y[i], lin[i]);
    fz /= data.n();
    grad = smooth_gradient(data, loss, lin);

    // Backtracking line search on the smooth majorization at z.
    double f_cand;
    for (;;) {
      for (int j = 0; j < p; ++j) cand[j] = soft(z[j] - step * grad[j], step * lambda);
      f_cand = mean_loss(data, loss, cand, lin_c);
      const Eigen::VectorXd diff = cand - z;
      const double quad = fz + grad.dot(diff) + diff.squaredNorm() / (2.0 * step);
      if (f_cand <= quad + 1e-14) break;
      step *= 0.5;
      if (step < 1e-14) break;
    }

    const double obj_cand = f_cand + lambda * cand.lpNorm<1>();
    if (obj_cand <= obj_x) {
      // Monotone acceleration: accept and carry momentum.
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
      z = cand + ((t_mom - 1.0) / t_next) * (cand - x);
      x = cand;
      obj_x = obj_cand;
      t_mom = t_next;
    } else {
      // Restart momentum from the best iterate.
      z = x;
      t_mom = 1.0;
    }

    lin.noalias() = data.X * x;
    const Eigen::VectorXd gx = smooth_gradient(data, loss, lin);
    if (subgradient_residual(gx, x, lambda) < opts.tol) {
      converged = true;
      break;
    }
  }

  fit.beta = x;
  fit.iterations = it;
  fit.converged = converged;
  for (int j = 0; j < p; ++j)
    if (x[j] != 0.0) fit.active_set.push_back(j);
  fit.objective = obj_x;
  return fit;
}

PrecisionEstimate glm_precision(const Dataset& data, const Eigen::VectorXd& beta_hat,
                                const LossSpec& loss, const Eigen::VectorXd& lambdas,
                                const LassoOptions& opts) {
  validate_dataset(data);
  if (beta_hat.size() != data.p()) fail(ErrorCode::dimension_mismatch, "beta_hat has wrong length");
  const Eigen::VectorXd lin = data.X * beta_hat;
  Eigen::MatrixXd Xw = data.X;
  for (int i = 0; i < data.n(); ++i) {
    const double w = loss.d2loss(data.Y[i], lin[i]);
    if (w <= 1e-12)
      fail(ErrorCode::non_positive_weight,
           "curvature weight is not positive at row " + std::to_string(i));
    Xw.row(i) *= std::sqrt(w);
  }
  return precision_estimate_matrix(Xw, lambdas, opts);
}

GlmDesparsifiedFit glm_desparsify(const Dataset& data, const Eigen::VectorXd& beta_hat,
                                  std::shared_ptr<const PrecisionEstimate> precision,
                                  const LossSpec& loss) {
  validate_dataset(data);
  const int n = data.n();
  const int p = data.p();
  if (beta_hat.size() != p || !precision || precision->p() != p)
    fail(ErrorCode::dimension_mismatch, "inconsistent dimensions in glm_desparsify");

  GlmDesparsifiedFit fit;
  fit.beta_hat = beta_hat;
  fit.precision = precision;
  fit.n = n;

  const Eigen::VectorXd lin = data.X * beta_hat;
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = loss.dloss(data.Y[i], lin[i]);

  const Eigen::VectorXd grad = data.X.transpose() * d / n;
  fit.kappa = -grad;
  fit.beta_breve = beta_hat - precision->theta * grad;

  // score_basis(i, j) = dL_i * x_i' Theta_j; studentization and the bootstrap
  // both reduce to column operations on it.
  auto basis = std::make_shared<Eigen::MatrixXd>(data.X * precision->theta.transpose());
  for (int i = 0; i < n; ++i) basis->row(i) *= d[i];
  fit.score_basis = std::move(basis);
  fit.w_diag = fit.score_basis->colwise().squaredNorm().transpose() / n;
  return fit;
}

BootstrapDistribution glm_bootstrap(const GlmDesparsifiedFit& fit, const std::vector<int>& group,
                                    int B, std::uint64_t seed, bool studentized) {
  const BootstrapVariant variant =
      studentized ? BootstrapVariant::st_two_sided : BootstrapVariant::nst_two_sided;
  return multiplier_bootstrap(*fit.score_basis, 1.0, fit.w_diag, group, variant, B, seed);
}

GlmTestResult glm_simultaneous_test(const GlmDesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                                    const std::vector<int>& group, const BootstrapDistribution& dist,
                                    double alpha) {
  if (beta_tilde.size() != fit.p())
    fail(ErrorCode::dimension_mismatch, "beta_tilde has wrong length");
  if (dist.group != group) fail(ErrorCode::group_mismatch, "distribution was built for another group");

  const double root_n = std::sqrt(static_cast<double>(fit.n));
  const bool studentized = dist.variant == BootstrapVariant::st_two_sided;
  double stat = -std::numeric_limits<double>::infinity();
  for (int j : group) {
    double v = root_n * std::fabs(fit.beta_breve[j] - beta_tilde[j]);
    if (studentized) v /= std::sqrt(fit.w_diag[j]);
    stat = std::max(stat, v);
  }

  GlmTestResult res;
  res.statistic = stat;
  res.critical = critical_value(dist, alpha);
  res.reject = stat > res.critical;
  const auto first_ge = std::lower_bound(dist.draws.begin(), dist.draws.end(), stat);
  res.p_value = static_cast<double>(dist.draws.end() - first_ge) / dist.num_draws;
  return res;
}

}  // namespace hdinfer
