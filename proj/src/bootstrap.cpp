#include "hdinfer/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hdinfer/errors.hpp"
#include "hdinfer/parallel.hpp"
#include "hdinfer/rng.hpp"

namespace hdinfer {

namespace {

void check_group(const std::vector<int>& group, int p) {
  if (group.empty()) fail(ErrorCode::empty_group, "empty group");
  for (int j : group)
    if (j < 0 || j >= p) fail(ErrorCode::group_out_of_range, "index " + std::to_string(j));
}

bool is_two_sided(BootstrapVariant v) {
  return v == BootstrapVariant::nst_two_sided || v == BootstrapVariant::st_two_sided;
}

bool is_studentized(BootstrapVariant v) {
  return v == BootstrapVariant::st_one_sided || v == BootstrapVariant::st_two_sided;
}

}  // namespace

BootstrapDistribution multiplier_bootstrap(const Eigen::MatrixXd& score_basis, double sigma_eps,
                                           const Eigen::VectorXd& omega_diag,
                                           const std::vector<int>& group, BootstrapVariant variant,
                                           int B, std::uint64_t seed) {
  const int n = static_cast<int>(score_basis.rows());
  const int p = static_cast<int>(score_basis.cols());
  check_group(group, p);
  if (B < 100) fail(ErrorCode::invalid_argument, "need at least 100 bootstrap draws");
  if (sigma_eps <= 0.0) fail(ErrorCode::invalid_argument, "sigma_eps must be positive");

  const int m = static_cast<int>(group.size());
  Eigen::MatrixXd basis_g(n, m);
  Eigen::VectorXd scale(m);
  for (int c = 0; c < m; ++c) {
    basis_g.col(c) = score_basis.col(group[c]);
    scale[c] = is_studentized(variant) ? sigma_eps / std::sqrt(omega_diag[group[c]]) : sigma_eps;
  }
  if (is_studentized(variant) && omega_diag.size() != p)
    fail(ErrorCode::dimension_mismatch, "omega_diag has wrong length");

  const double root_n = std::sqrt(static_cast<double>(n));
  const bool two_sided = is_two_sided(variant);

  BootstrapDistribution dist;
  dist.draws.resize(B);
  dist.variant = variant;
  dist.group = group;
  dist.num_draws = B;
  dist.seed = seed;

  parallel_for(0, static_cast<std::size_t>(B), [&](std::size_t b) {
    RngStream rng(seed, b);
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e[i] = rng.normal();
    const Eigen::VectorXd s = basis_g.transpose() * e / root_n;
    double draw = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < m; ++c) {
      const double v = s[c] * scale[c];
      draw = std::max(draw, two_sided ? std::fabs(v) : v);
    }
    dist.draws[b] = draw;
  });

  std::sort(dist.draws.begin(), dist.draws.end());
  return dist;
}

BootstrapDistribution empirical_bootstrap(const Eigen::MatrixXd& score_basis, double sigma_eps,
                                          const std::vector<int>& group, int B,
                                          std::uint64_t seed) {
  const int n = static_cast<int>(score_basis.rows());
  check_group(group, static_cast<int>(score_basis.cols()));
  if (B < 100) fail(ErrorCode::invalid_argument, "need at least 100 bootstrap draws");

  const int m = static_cast<int>(group.size());
  Eigen::MatrixXd h(n, m);
  for (int c = 0; c < m; ++c) h.col(c) = score_basis.col(group[c]) * sigma_eps;
  const Eigen::RowVectorXd h_bar = h.colwise().mean();
  const double root_n = std::sqrt(static_cast<double>(n));

  BootstrapDistribution dist;
  dist.draws.resize(B);
  dist.variant = BootstrapVariant::nst_two_sided;
  dist.group = group;
  dist.num_draws = B;
  dist.seed = seed;

  parallel_for(0, static_cast<std::size_t>(B), [&](std::size_t b) {
    RngStream rng(seed, b);
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(m);
    for (int i = 0; i < n; ++i)
      sum += h.row(static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n))));
    const Eigen::RowVectorXd centered = (sum - static_cast<double>(n) * h_bar) / root_n;
    dist.draws[b] = centered.cwiseAbs().maxCoeff();
  });

  std::sort(dist.draws.begin(), dist.draws.end());
  return dist;
}

double critical_value(const BootstrapDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::invalid_alpha, "alpha must be in (0,1)");
  const int B = dist.num_draws;
  long idx = static_cast<long>(std::ceil((1.0 - alpha) * B));  // 1-indexed order statistic
  idx = std::clamp(idx, 1L, static_cast<long>(B));
  return dist.draws[idx - 1];
}

double extreme_value_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::invalid_alpha, "alpha must be in (0,1)");
  return -2.0 * std::log(std::sqrt(M_PI) * std::log(1.0 / (1.0 - alpha)));
}

double extreme_value_critical(double alpha, int group_size) {
  if (group_size < 2) fail(ErrorCode::invalid_argument, "extreme-value approximation needs |G| >= 2");
  const double m = static_cast<double>(group_size);
  return 2.0 * std::log(m) - std::log(std::log(m)) + extreme_value_quantile(alpha);
}

TestResult simultaneous_test(const DesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                             const std::vector<int>& group, const BootstrapDistribution& dist,
                             double alpha) {
  if (beta_tilde.size() != fit.p())
    fail(ErrorCode::dimension_mismatch, "beta_tilde has wrong length");
  if (dist.group != group) fail(ErrorCode::group_mismatch, "distribution was built for another group");
  check_group(group, fit.p());

  const double root_n = std::sqrt(static_cast<double>(fit.n));
  const bool two_sided = is_two_sided(dist.variant);
  const bool studentized = is_studentized(dist.variant);

  double stat = -std::numeric_limits<double>::infinity();
  for (int j : group) {
    double v = root_n * (fit.beta_breve[j] - beta_tilde[j]);
    if (two_sided) v = std::fabs(v);
    if (studentized) v /= std::sqrt(fit.omega_diag[j]);
    stat = std::max(stat, v);
  }

  TestResult res;
  res.statistic = stat;
  res.critical = critical_value(dist, alpha);
  res.reject = stat > res.critical;
  const auto first_ge = std::lower_bound(dist.draws.begin(), dist.draws.end(), stat);
  res.p_value = static_cast<double>(dist.draws.end() - first_ge) / dist.num_draws;
  return res;
}

Eigen::MatrixXd bootstrap_scores(const Eigen::MatrixXd& score_basis, const std::vector<int>& group,
                                 int B, std::uint64_t seed) {
  const int n = static_cast<int>(score_basis.rows());
  check_group(group, static_cast<int>(score_basis.cols()));
  if (B < 100) fail(ErrorCode::invalid_argument, "need at least 100 bootstrap draws");

  const int m = static_cast<int>(group.size());
  Eigen::MatrixXd basis_g(n, m);
  for (int c = 0; c < m; ++c) basis_g.col(c) = score_basis.col(group[c]);
  const double root_n = std::sqrt(static_cast<double>(n));

  Eigen::MatrixXd scores(B, m);
  parallel_for(0, static_cast<std::size_t>(B), [&](std::size_t b) {
    RngStream rng(seed, b);
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e[i] = rng.normal();
    scores.row(b) = (basis_g.transpose() * e / root_n).transpose();
  });
  return scores;
}

}  // namespace hdinfer
