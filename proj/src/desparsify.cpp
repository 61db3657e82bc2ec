#include "hdinfer/desparsify.hpp"

#include <cmath>
#include <string>

#include "hdinfer/errors.hpp"

namespace hdinfer {

DesparsifiedFit desparsify(const Dataset& data, const LassoFit& lasso,
                           std::shared_ptr<const PrecisionEstimate> precision,
                           double sigma_eps_sq,
                           std::shared_ptr<const Eigen::MatrixXd> score_basis) {
  validate_dataset(data);
  const int n = data.n();
  const int p = data.p();
  if (!precision || precision->p() != p || lasso.beta.size() != p)
    fail(ErrorCode::dimension_mismatch, "inconsistent dimensions in desparsify");
  if (sigma_eps_sq <= 0.0) fail(ErrorCode::invalid_argument, "sigma_eps_sq must be positive");
  if (score_basis && (score_basis->rows() != n || score_basis->cols() != p))
    fail(ErrorCode::dimension_mismatch, "score basis has wrong shape");

  DesparsifiedFit fit;
  fit.beta_hat = lasso.beta;
  fit.sigma_eps_sq = sigma_eps_sq;
  fit.precision = precision;
  fit.n = n;

  const Eigen::VectorXd resid = data.Y - data.X * lasso.beta;
  const Eigen::VectorXd corr = data.X.transpose() * resid / n;
  fit.beta_breve = lasso.beta + precision->theta * corr;

  if (!score_basis)
    score_basis = std::make_shared<const Eigen::MatrixXd>(data.X * precision->theta.transpose());
  fit.score_basis = score_basis;

  fit.omega_diag = sigma_eps_sq * score_basis->colwise().squaredNorm().transpose() / n;
  for (int j = 0; j < p; ++j)
    if (!(fit.omega_diag[j] > 0.0))
      fail(ErrorCode::degenerate_variance, "omega_jj not positive at column " + std::to_string(j));
  return fit;
}

RemainderDiagnostic remainder_diagnostic(DesparsifiedFit& fit, const Dataset& data,
                                         const Eigen::VectorXd& beta_true) {
  const int n = data.n();
  const int p = data.p();
  if (beta_true.size() != p) fail(ErrorCode::dimension_mismatch, "beta_true has wrong length");
  const double root_n = std::sqrt(static_cast<double>(n));

  const Eigen::VectorXd diff = fit.beta_hat - beta_true;
  // (Theta Sigma_hat - I) diff without materializing Theta*Sigma.
  const Eigen::VectorXd sigma_diff = data.X.transpose() * (data.X * diff) / n;
  RemainderDiagnostic diag;
  diag.delta = -root_n * (fit.precision->theta * sigma_diff - diff);
  diag.delta_star.resize(p);
  for (int j = 0; j < p; ++j) diag.delta_star[j] = diag.delta[j] / std::sqrt(fit.omega_diag[j]);

  // Expansion identity: sqrt(n)(breve - true) = Theta X' eps0 / sqrt(n) + delta.
  const Eigen::VectorXd eps0 = data.Y - data.X * beta_true;
  const Eigen::VectorXd lead = fit.precision->theta * (data.X.transpose() * eps0) / root_n;
  const Eigen::VectorXd gap =
      root_n * (fit.beta_breve - beta_true) - lead - diag.delta;
  if (gap.lpNorm<Eigen::Infinity>() > 1e-8)
    fail(ErrorCode::internal, "de-biased expansion identity violated");

  fit.delta = diag.delta;
  return diag;
}

std::vector<Interval> simultaneous_ci(const DesparsifiedFit& fit, const std::vector<int>& group,
                                      double critical, bool studentized) {
  if (group.empty()) fail(ErrorCode::empty_group, "empty group");
  if (critical < 0.0) fail(ErrorCode::invalid_argument, "critical value must be nonnegative");
  const double root_n = std::sqrt(static_cast<double>(fit.n));
  std::vector<Interval> out;
  out.reserve(group.size());
  for (int j : group) {
    if (j < 0 || j >= fit.p()) fail(ErrorCode::group_out_of_range, "index " + std::to_string(j));
    const double half =
        studentized ? critical * std::sqrt(fit.omega_diag[j]) / root_n : critical / root_n;
    out.push_back({fit.beta_breve[j] - half, fit.beta_breve[j] + half});
  }
  return out;
}

}  // namespace hdinfer
