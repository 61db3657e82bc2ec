#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include "hdinfer/errors.hpp"
#include "hdinfer/procedures.hpp"
#include "hdinfer/sim.hpp"
#include "hdinfer/stats.hpp"
#include "helpers.hpp"

using namespace hdinfer;

namespace {

DesparsifiedFit pipeline_fit(const Dataset& d) {
  const ScaledLassoFit sc = scaled_lasso_fit(d, universal_lambda0(d.n(), d.p()));
  const auto precision = std::make_shared<const PrecisionEstimate>(precision_estimate(d, 0.25));
  return desparsify(d, sc.fit, precision, sc.sigma_hat_modified * sc.sigma_hat_modified);
}

}  // namespace

TEST_CASE("support recovery: thresholds, degenerate taus, monotonicity") {
  const Dataset d = test_helpers::random_dataset(50, 8, 121);
  DesparsifiedFit fit = pipeline_fit(d);
  std::vector<int> all = {0, 1, 2, 3, 4, 5, 6, 7};

  // tau = 0 selects every nonzero de-biased coordinate in the candidate set.
  const RecoveryResult all_nonzero = support_recover(fit, all, 0.0);
  std::vector<int> expect;
  for (int j = 0; j < 8; ++j)
    if (fit.beta_breve[j] != 0.0) expect.push_back(j);
  CHECK(all_nonzero.selected == expect);

  // Zero estimate: nothing selected at any positive tau.
  DesparsifiedFit zero = fit;
  zero.beta_breve.setZero();
  CHECK(support_recover(zero, all, 0.5).selected.empty());

  // Thresholds follow the formula with p = full dimension.
  const double tau = 2.0;
  const RecoveryResult rec = support_recover(fit, {3, 5}, tau);
  for (int c = 0; c < 2; ++c) {
    const int j = rec.selected.empty() ? std::vector<int>{3, 5}[c] : std::vector<int>{3, 5}[c];
    (void)j;
    const double expected =
        std::sqrt(tau * fit.omega_diag[std::vector<int>{3, 5}[c]] * std::log(8.0) / 50.0);
    CHECK(rec.thresholds[c] == doctest::Approx(expected).epsilon(1e-12));
  }

  // Selection shrinks as tau grows.
  const RecoveryResult loose = support_recover(fit, all, 0.5);
  const RecoveryResult tight = support_recover(fit, all, 3.0);
  for (int j : tight.selected)
    CHECK(std::binary_search(loose.selected.begin(), loose.selected.end(), j));
}

TEST_CASE("similarity measure") {
  CHECK(similarity({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(similarity({4, 5}, {1, 2, 3}) == 0.0);
  CHECK(similarity({}, {1}) == 0.0);
  CHECK(similarity({1, 2, 3, 4}, {1, 2, 3}) == doctest::Approx(3.0 / std::sqrt(12.0)));
  CHECK_THROWS_AS(similarity({1}, {}), Error);
}

TEST_CASE("sample splitting: sizes, determinism, degenerate guard") {
  const auto [d1, d2] = split_sample(100, 0.2, 5);
  CHECK(d1.size() == 20);
  CHECK(d2.size() == 80);

  const auto [e1, e2] = split_sample(100, 1.0 / 3.0, 5);
  CHECK(e1.size() == 33);
  CHECK(e2.size() == 67);

  const auto [f1, f2] = split_sample(100, 0.2, 5);
  CHECK(d1 == f1);
  CHECK(d2 == f2);

  std::set<int> all(d1.begin(), d1.end());
  all.insert(d2.begin(), d2.end());
  CHECK(all.size() == 100);

  CHECK_THROWS_AS(split_sample(25, 0.2, 1), Error);  // 5 observations in D1
}

TEST_CASE("marginal screening: full retention, argmax construction, tie-break") {
  // k >= p keeps everything.
  const Eigen::MatrixXd X = test_helpers::random_matrix(20, 5, 131);
  const Eigen::VectorXd Y = test_helpers::random_vector(20, 132);
  CHECK(marginal_screen(X, Y, 5) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(marginal_screen(X, Y, 99) == std::vector<int>{0, 1, 2, 3, 4});

  // Orthogonal columns with the response equal to one of them: that column
  // has the strictly largest correlation.
  const Eigen::MatrixXd Q = test_helpers::orthonormal_design(20, 5, 133);
  const Eigen::VectorXd y = Q.col(2);
  CHECK(marginal_screen(Q, y, 1) == std::vector<int>{2});
  const std::vector<int> top3 = marginal_screen(Q, y, 3);
  CHECK(std::binary_search(top3.begin(), top3.end(), 2));

  // Exact ties go to the smaller index.
  Eigen::MatrixXd T(4, 3);
  T.col(0) << 1, 1, -1, -1;
  T.col(1) = -T.col(0);
  T.col(2) << 1, -1, 1, -1;
  Eigen::VectorXd yt = T.col(0);
  CHECK(marginal_screen(T, yt, 1) == std::vector<int>{0});
}

TEST_CASE("iterative screening: reduces to marginal at k1=0 and keeps size k") {
  const int n1 = 40, p = 30;
  const Eigen::MatrixXd X = test_helpers::random_matrix(n1, p, 137);
  Eigen::VectorXd y = 2.0 * X.col(3) - 1.5 * X.col(7) + test_helpers::random_vector(n1, 138);

  CHECK(iterative_screen(X, y, 10, 0) == marginal_screen(X, y, 10));

  for (int k1 : {2, 5, 9}) {
    const std::vector<int> b = iterative_screen(X, y, 10, k1);
    CHECK(b.size() == 10);
    std::set<int> uniq(b.begin(), b.end());
    CHECK(uniq.size() == 10);
  }
  CHECK_THROWS_AS(iterative_screen(X, y, 10, 10), Error);
}

TEST_CASE("three-step test: empty surviving group means no rejection") {
  const Dataset d = test_helpers::random_dataset(60, 40, 139);
  ThreeStepOptions opts;
  opts.c0 = 1.0 / 3.0;
  opts.size = ScreenSize::d2_over_log;  // small screened set
  const std::uint64_t seed = 9;

  // Find a column that screening drops, then test exactly that singleton.
  const auto [d1, d2] = split_sample(d.n(), opts.c0, seed);
  Eigen::MatrixXd X1(d1.size(), d.p());
  Eigen::VectorXd Y1(d1.size());
  for (std::size_t i = 0; i < d1.size(); ++i) {
    X1.row(i) = d.X.row(d1[i]);
    Y1[i] = d.Y[d1[i]];
  }
  const int k = static_cast<int>(d2.size() / std::log(static_cast<double>(d2.size())));
  const std::vector<int> kept = marginal_screen(X1, Y1, k);
  int dropped = -1;
  for (int j = 0; j < d.p(); ++j)
    if (!std::binary_search(kept.begin(), kept.end(), j)) {
      dropped = j;
      break;
    }
  REQUIRE(dropped >= 0);

  const ThreeStepResult res = three_step_test(d, {dropped}, 0.05, 200, seed, opts);
  CHECK_FALSE(res.reject);
  CHECK(res.statistic == 0.0);
  CHECK(res.reduced_group.empty());
}

TEST_CASE("three-step test: screening ignores D2 and testing ignores D1") {
  Dataset d = test_helpers::random_dataset(60, 25, 149);
  ThreeStepOptions opts;
  opts.c0 = 1.0 / 3.0;
  const std::uint64_t seed = 21;
  std::vector<int> group = {0, 1, 2, 3, 4};

  const ThreeStepResult base = three_step_test(d, group, 0.05, 200, seed, opts);

  // Perturbing only D2 rows leaves the screened set untouched.
  Dataset d2_perturbed = d;
  for (int i : base.d2) d2_perturbed.Y[i] += 0.37;
  const ThreeStepResult alt = three_step_test(d2_perturbed, group, 0.05, 200, seed, opts);
  CHECK(alt.screened == base.screened);

  // Scaling Y on D1 reorders nothing in the marginal ranking, so the
  // screened set and hence the D2-only test statistic are unchanged.
  Dataset d1_scaled = d;
  for (int i : base.d1) d1_scaled.Y[i] *= 2.0;
  const ThreeStepResult alt2 = three_step_test(d1_scaled, group, 0.05, 200, seed, opts);
  CHECK(alt2.screened == base.screened);
  CHECK(alt2.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
}

TEST_CASE("step-down: single hypothesis agrees with the plain test") {
  const Dataset d = test_helpers::random_dataset(50, 10, 151);
  DesparsifiedFit fit = pipeline_fit(d);
  const Eigen::VectorXd beta_null = Eigen::VectorXd::Zero(10);
  const std::vector<int> group = {4};
  const int B = 300;
  const std::uint64_t seed = 31;

  const StepdownResult sd =
      stepdown_fwer(fit, beta_null, group, 0.05, B, seed, Sided::one);
  const BootstrapDistribution dist =
      multiplier_bootstrap(*fit.score_basis, std::sqrt(fit.sigma_eps_sq), fit.omega_diag, group,
                           BootstrapVariant::nst_one_sided, B, seed);
  const TestResult single = simultaneous_test(fit, beta_null, group, dist, 0.05);
  CHECK((sd.rejected.size() == 1) == single.reject);
  CHECK(sd.steps.front().critical == doctest::Approx(single.critical));
}

TEST_CASE("step-down: critical values shrink and rejections extend the first stage") {
  Scenario sc;
  sc.n = 80;
  sc.p = 30;
  sc.s0 = 3;
  sc.covariance = CovarianceKind::toeplitz;
  sc.rho = 0.5;
  sc.coef_a = 1.0;
  sc.coef_b = 3.0;
  sc.seed = 4;
  Dataset d;
  d.X = sample_design(make_covariance(sc), sc.n, sc.seed);
  d.Y = Eigen::VectorXd::Zero(sc.n);
  d = standardize(d);
  const Coefficients coef = make_coefficients(sc, sc.seed);
  Eigen::VectorXd y = d.X * coef.beta0 + sample_errors(ErrorDist::gaussian, sc.n, 5);
  d.Y = y.array() - y.mean();

  DesparsifiedFit fit = pipeline_fit(d);
  const Eigen::VectorXd beta_null = Eigen::VectorXd::Zero(sc.p);
  std::vector<int> all(sc.p);
  std::iota(all.begin(), all.end(), 0);

  const StepdownResult sd = stepdown_fwer(fit, beta_null, all, 0.05, 400, 41, Sided::two);
  REQUIRE(!sd.steps.empty());
  for (std::size_t s = 1; s < sd.steps.size(); ++s)
    CHECK(sd.steps[s].critical <= sd.steps[s - 1].critical + 1e-15);

  // First-stage rejections are a subset of the final rejections.
  const double c1 = sd.steps.front().critical;
  const double root_n = std::sqrt(static_cast<double>(sc.n));
  for (int j = 0; j < sc.p; ++j) {
    if (root_n * std::fabs(fit.beta_breve[j]) > c1)
      CHECK(std::binary_search(sd.rejected.begin(), sd.rejected.end(), j));
  }
  // With strong signals, the step-down should reject the active set here.
  for (int j : coef.support) CHECK(std::binary_search(sd.rejected.begin(), sd.rejected.end(), j));
}

TEST_CASE("step-down: no rejections means a single recorded step") {
  const Dataset d = test_helpers::random_dataset(40, 8, 157);  // pure noise response
  DesparsifiedFit fit = pipeline_fit(d);
  std::vector<int> all = {0, 1, 2, 3, 4, 5, 6, 7};
  Eigen::VectorXd null_at_estimate = fit.beta_breve;  // statistic exactly zero
  const StepdownResult sd =
      stepdown_fwer(fit, null_at_estimate, all, 0.05, 200, 43, Sided::two);
  CHECK(sd.rejected.empty());
  CHECK(sd.steps.size() == 1);
}

TEST_CASE("Holm baseline: trivial cases and single-hypothesis z-test") {
  const Dataset d = test_helpers::random_dataset(50, 6, 163);
  DesparsifiedFit fit = pipeline_fit(d);
  const Eigen::VectorXd beta_null = Eigen::VectorXd::Zero(6);
  CHECK(bonferroni_holm(fit, beta_null, {}, 0.05).empty());

  for (int j = 0; j < 6; ++j) {
    const double z =
        std::sqrt(50.0) * std::fabs(fit.beta_breve[j] - beta_null[j]) / std::sqrt(fit.omega_diag[j]);
    const bool plain_reject = normal_two_sided_pvalue(z) <= 0.05;
    const std::vector<int> rej = bonferroni_holm(fit, beta_null, {j}, 0.05);
    CHECK((rej.size() == 1) == plain_reject);
  }
}
