#include "hdinfer/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "hdinfer/errors.hpp"
#include "hdinfer/rng.hpp"
#include "hdinfer/stats.hpp"

namespace hdinfer {

RecoveryResult support_recover(const DesparsifiedFit& fit, const std::vector<int>& G_tilde,
                               double tau) {
  if (tau < 0.0) fail(ErrorCode::invalid_argument, "tau must be nonnegative");
  const int p = fit.p();
  const double log_p_over_n = std::log(static_cast<double>(p)) / fit.n;

  RecoveryResult res;
  res.tau = tau;
  res.thresholds.reserve(G_tilde.size());
  for (int j : G_tilde) {
    if (j < 0 || j >= p) fail(ErrorCode::group_out_of_range, "index " + std::to_string(j));
    const double thr = std::sqrt(tau * fit.omega_diag[j] * log_p_over_n);
    res.thresholds.push_back(thr);
    if (std::fabs(fit.beta_breve[j]) > thr) res.selected.push_back(j);
  }
  return res;
}

double similarity(const std::vector<int>& S_hat, const std::vector<int>& S0) {
  if (S0.empty()) fail(ErrorCode::empty_truth, "reference support is empty");
  if (S_hat.empty()) return 0.0;
  const std::set<int> truth(S0.begin(), S0.end());
  int overlap = 0;
  for (int j : S_hat) overlap += truth.count(j);
  return overlap / std::sqrt(static_cast<double>(S_hat.size()) * truth.size());
}

std::pair<std::vector<int>, std::vector<int>> split_sample(int n, double c0, std::uint64_t seed) {
  if (!(c0 > 0.0 && c0 < 1.0)) fail(ErrorCode::invalid_argument, "c0 must be in (0,1)");
  const int n1 = static_cast<int>(std::floor(c0 * n));
  const int n2 = n - n1;
  if (n1 < 10 || n2 < 10)
    fail(ErrorCode::degenerate_split, "split sizes " + std::to_string(n1) + "/" +
                                          std::to_string(n2) + " are too small");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng(derive_seed(seed, rng_tag::split), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);

  std::vector<int> d1(perm.begin(), perm.begin() + n1);
  std::vector<int> d2(perm.begin() + n1, perm.end());
  std::sort(d1.begin(), d1.end());
  std::sort(d2.begin(), d2.end());
  return {d1, d2};
}

namespace {

// Rank columns by |score| descending, ties to the smaller index; top k.
std::vector<int> top_k_by_abs(const Eigen::VectorXd& score, const std::vector<int>& candidates,
                              int k) {
  std::vector<int> order = candidates;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double va = std::fabs(score[a]);
    const double vb = std::fabs(score[b]);
    if (va != vb) return va > vb;
    return a < b;
  });
  if (static_cast<int>(order.size()) > k) order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

std::vector<int> marginal_screen(const Eigen::MatrixXd& X1, const Eigen::VectorXd& Y1, int k) {
  const int p = static_cast<int>(X1.cols());
  if (k < 1) fail(ErrorCode::invalid_argument, "k must be at least 1");
  if (X1.rows() != Y1.size()) fail(ErrorCode::dimension_mismatch, "rows of X1 and Y1 differ");
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);
  if (k >= p) return all;
  const Eigen::VectorXd w = X1.transpose() * Y1;
  return top_k_by_abs(w, all, k);
}

std::vector<int> iterative_screen(const Eigen::MatrixXd& X1, const Eigen::VectorXd& Y1, int k,
                                  int k1, const LassoOptions& opts) {
  const int p = static_cast<int>(X1.cols());
  const int n1 = static_cast<int>(X1.rows());
  if (k1 < 0 || k1 >= k) fail(ErrorCode::invalid_argument, "need 0 <= k1 < k");
  if (k1 == 0) return marginal_screen(X1, Y1, k);
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);
  if (k >= p) return all;

  // Stage one: Lasso on the screening subsample, ranked by |beta_j|.
  Dataset d1;
  d1.X = X1;
  d1.Y = Y1;
  const Dataset d1s = standardize(d1);
  const ScaledLassoFit sc = scaled_lasso_fit(d1s, universal_lambda0(n1, p), opts);

  std::vector<int> b1 = top_k_by_abs(sc.beta_sc, sc.fit.active_set, k1);
  if (static_cast<int>(b1.size()) < k1) {
    // Sparser fit than requested: pad from the marginal ranking.
    const Eigen::VectorXd w = X1.transpose() * Y1;
    std::vector<int> rest;
    const std::set<int> taken(b1.begin(), b1.end());
    for (int j = 0; j < p; ++j)
      if (!taken.count(j)) rest.push_back(j);
    const std::vector<int> pad = top_k_by_abs(w, rest, k1 - static_cast<int>(b1.size()));
    b1.insert(b1.end(), pad.begin(), pad.end());
    std::sort(b1.begin(), b1.end());
  }

  // Stage two: marginal screening of the Lasso residuals over the rest.
  // Residuals come from the standardized stage-one fit.
  const Eigen::VectorXd resid = d1s.Y - d1s.X * sc.beta_sc;
  std::vector<int> rest;
  const std::set<int> taken(b1.begin(), b1.end());
  for (int j = 0; j < p; ++j)
    if (!taken.count(j)) rest.push_back(j);
  const Eigen::VectorXd w2 = X1.transpose() * resid;
  const std::vector<int> b2 = top_k_by_abs(w2, rest, k - k1);

  std::vector<int> out = b1;
  out.insert(out.end(), b2.begin(), b2.end());
  std::sort(out.begin(), out.end());
  return out;
}

ThreeStepResult three_step_test(const Dataset& data, const std::vector<int>& G_tilde, double alpha,
                                int B, std::uint64_t seed, const ThreeStepOptions& opts) {
  validate_dataset(data);
  if (G_tilde.empty()) fail(ErrorCode::empty_group, "empty group");
  const int n = data.n();
  const int p = data.p();
  for (int j : G_tilde)
    if (j < 0 || j >= p) fail(ErrorCode::group_out_of_range, "index " + std::to_string(j));

  ThreeStepResult res;
  std::tie(res.d1, res.d2) = split_sample(n, opts.c0, seed);
  const int n2 = static_cast<int>(res.d2.size());

  int k = opts.size == ScreenSize::d2_minus_one
              ? n2 - 1
              : static_cast<int>(std::floor(n2 / std::log(static_cast<double>(n2))));
  k = std::max(k, 1);

  // Screening sees only the D1 rows.
  Eigen::MatrixXd X1(res.d1.size(), p);
  Eigen::VectorXd Y1(res.d1.size());
  for (std::size_t i = 0; i < res.d1.size(); ++i) {
    X1.row(i) = data.X.row(res.d1[i]);
    Y1[i] = data.Y[res.d1[i]];
  }
  if (opts.mode == ScreenMode::marginal) {
    res.screened = marginal_screen(X1, Y1, k);
  } else {
    const int k1 = opts.k1 >= 0 ? opts.k1 : k / 2;
    res.screened = iterative_screen(X1, Y1, k, k1, opts.pipeline.lasso);
  }

  const std::set<int> survivors(res.screened.begin(), res.screened.end());
  for (int j : G_tilde)
    if (survivors.count(j)) res.reduced_group.push_back(j);
  if (res.reduced_group.empty()) {
    res.reject = false;  // nothing from the group survived screening
    res.statistic = 0.0;
    return res;
  }

  // Testing sees only the D2 rows, restricted to the screened columns.
  Dataset d2;
  d2.X.resize(n2, res.screened.size());
  d2.Y.resize(n2);
  for (int i = 0; i < n2; ++i) {
    for (std::size_t c = 0; c < res.screened.size(); ++c)
      d2.X(i, c) = data.X(res.d2[i], res.screened[c]);
    d2.Y[i] = data.Y[res.d2[i]];
  }
  const Dataset d2s = standardize(d2);

  PipelineOptions popts = opts.pipeline;
  popts.lambda0 = 0.0;  // re-derive the tuning constant for the reduced shape
  popts.nodewise_lambda = 0.0;
  popts.cv_seed = derive_seed(seed, rng_tag::cv_folds);
  const PipelineFit fit = fit_pipeline(d2s, popts);

  // Positions of the surviving group members inside the reduced model.
  std::vector<int> reduced_idx;
  for (int j : res.reduced_group) {
    const auto it = std::lower_bound(res.screened.begin(), res.screened.end(), j);
    reduced_idx.push_back(static_cast<int>(it - res.screened.begin()));
  }

  const BootstrapVariant variant =
      opts.studentized ? BootstrapVariant::st_two_sided : BootstrapVariant::nst_two_sided;
  const BootstrapDistribution dist =
      multiplier_bootstrap(*fit.desp.score_basis, std::sqrt(fit.desp.sigma_eps_sq),
                           fit.desp.omega_diag, reduced_idx, variant, B,
                           derive_seed(seed, rng_tag::bootstrap));
  const TestResult tr = simultaneous_test(fit.desp, Eigen::VectorXd::Zero(fit.desp.p()),
                                          reduced_idx, dist, alpha);
  res.reject = tr.reject;
  res.statistic = tr.statistic;
  res.critical = tr.critical;
  res.p_value = tr.p_value;
  return res;
}

StepdownResult stepdown_fwer(const DesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                             const std::vector<int>& G, double alpha, int B, std::uint64_t seed,
                             Sided sided, bool studentized) {
  if (beta_tilde.size() != fit.p())
    fail(ErrorCode::dimension_mismatch, "beta_tilde has wrong length");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::invalid_alpha, "alpha must be in (0,1)");
  if (G.empty()) fail(ErrorCode::empty_group, "empty group");

  const double root_n = std::sqrt(static_cast<double>(fit.n));
  const double sigma = std::sqrt(fit.sigma_eps_sq);
  const int m = static_cast<int>(G.size());

  // One shared multiplier stream for every step.
  Eigen::MatrixXd scores = bootstrap_scores(*fit.score_basis, G, B, seed);
  Eigen::VectorXd scale(m);
  Eigen::VectorXd stat(m);
  for (int c = 0; c < m; ++c) {
    const int j = G[c];
    scale[c] = studentized ? sigma / std::sqrt(fit.omega_diag[j]) : sigma;
    double t = root_n * (fit.beta_breve[j] - beta_tilde[j]);
    if (sided == Sided::two) t = std::fabs(t);
    if (studentized) t /= std::sqrt(fit.omega_diag[j]);
    stat[c] = t;
  }

  StepdownResult res;
  res.alpha = alpha;
  std::vector<int> active(m);
  std::iota(active.begin(), active.end(), 0);

  std::vector<double> draws(B);
  double prev_crit = std::numeric_limits<double>::infinity();
  while (!active.empty()) {
    for (int b = 0; b < B; ++b) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c : active) {
        double v = scores(b, c) * scale[c];
        if (sided == Sided::two) v = std::fabs(v);
        mx = std::max(mx, v);
      }
      draws[b] = mx;
    }
    std::sort(draws.begin(), draws.end());
    long idx = static_cast<long>(std::ceil((1.0 - alpha) * B));
    idx = std::clamp(idx, 1L, static_cast<long>(B));
    const double crit = draws[idx - 1];
    if (crit > prev_crit + 1e-12)
      fail(ErrorCode::internal, "step-down critical values must be non-increasing");
    prev_crit = crit;

    StepdownStep step;
    for (int c : active) step.active.push_back(G[c]);
    step.critical = crit;
    res.steps.push_back(std::move(step));

    std::vector<int> next;
    bool new_rejection = false;
    for (int c : active) {
      if (stat[c] > crit) {
        res.rejected.push_back(G[c]);
        new_rejection = true;
      } else {
        next.push_back(c);
      }
    }
    if (!new_rejection) break;
    active = std::move(next);
  }
  std::sort(res.rejected.begin(), res.rejected.end());
  return res;
}

std::vector<int> bonferroni_holm(const DesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                                 const std::vector<int>& G, double alpha) {
  if (beta_tilde.size() != fit.p())
    fail(ErrorCode::dimension_mismatch, "beta_tilde has wrong length");
  if (G.empty()) return {};
  const double root_n = std::sqrt(static_cast<double>(fit.n));

  const int m = static_cast<int>(G.size());
  std::vector<std::pair<double, int>> pvals(m);
  for (int c = 0; c < m; ++c) {
    const int j = G[c];
    const double z = root_n * std::fabs(fit.beta_breve[j] - beta_tilde[j]) /
                     std::sqrt(fit.omega_diag[j]);
    pvals[c] = {normal_two_sided_pvalue(z), j};
  }
  std::sort(pvals.begin(), pvals.end());

  std::vector<int> rejected;
  for (int k = 0; k < m; ++k) {
    if (pvals[k].first > alpha / (m - k)) break;
    rejected.push_back(pvals[k].second);
  }
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

}  // namespace hdinfer
