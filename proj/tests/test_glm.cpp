#include <doctest.h>

#include <cmath>
#include <memory>

#include "hdinfer/errors.hpp"
#include "hdinfer/glm.hpp"
#include "hdinfer/sim.hpp"
#include "helpers.hpp"

using namespace hdinfer;

namespace {

Dataset logistic_data(int n, int p, const Eigen::VectorXd& beta, std::uint64_t seed) {
  Dataset d;
  d.X = test_helpers::random_matrix(n, p, seed);
  d.Y.resize(n);
  RngStream rng(seed, 99);
  for (int i = 0; i < n; ++i) {
    const double a = d.X.row(i).dot(beta);
    const double prob = 1.0 / (1.0 + std::exp(-a));
    d.Y[i] = rng.uniform() < prob ? 1.0 : 0.0;
  }
  return d;
}

/// Unpenalized logistic MLE by Newton iterations (test-only oracle).
Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd a = X * beta;
    Eigen::VectorXd mu(n), w(n);
    for (int i = 0; i < n; ++i) {
      mu[i] = 1.0 / (1.0 + std::exp(-a[i]));
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    const Eigen::VectorXd grad = X.transpose() * (mu - y) / n;
    const Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X / n;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  return beta;
}

}  // namespace

TEST_CASE("logistic loss: point values and finite-difference consistency") {
  const LossSpec spec = logistic_loss();
  CHECK(spec.dloss(1.0, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(spec.d2loss(0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(spec.d2loss(1.0, 0.0) == doctest::Approx(0.25).epsilon(1e-15));

  const double h = 1e-6;
  for (double y : {0.0, 1.0}) {
    for (double a = -10.0; a <= 10.0 + 1e-9; a += 0.5) {
      const double fd1 = (spec.loss(y, a + h) - spec.loss(y, a - h)) / (2.0 * h);
      const double d1 = spec.dloss(y, a);
      CHECK(std::fabs(fd1 - d1) <= 1e-4 * std::max(1.0, std::fabs(d1)));
      const double fd2 = (spec.dloss(y, a + h) - spec.dloss(y, a - h)) / (2.0 * h);
      const double d2 = spec.d2loss(y, a);
      CHECK(std::fabs(fd2 - d2) <= 1e-4 * std::max(1.0, std::fabs(d2)));
      CHECK(d2 >= 0.0);
    }
  }
  // Overflow-safe far out in the tails.
  CHECK(std::isfinite(spec.loss(1.0, 700.0)));
  CHECK(std::isfinite(spec.loss(0.0, -700.0)));
  CHECK(spec.d2loss(0.0, 40.0) >= 0.0);
}

TEST_CASE("glm lasso: huge penalty zeroes out, squared loss matches the linear solver") {
  Eigen::VectorXd beta_true(4);
  beta_true << 1.0, -0.5, 0.0, 0.0;
  const Dataset d = logistic_data(80, 4, beta_true, 171);
  const GlmFit at_huge = glm_lasso_fit(d, logistic_loss(), 50.0);
  CHECK(at_huge.beta.isZero());
  CHECK(at_huge.converged);

  // Squared loss at the same lambda reproduces the linear-module fit; the
  // linear objective is exactly twice the glm objective.
  Dataset lin = test_helpers::random_dataset(40, 8, 173, false);
  const double lambda = 0.1;
  const GlmFit g = glm_lasso_fit(lin, squared_loss(), lambda);
  const LassoFit l = lasso_fit(lin, lambda);
  CHECK((g.beta - l.beta).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("glm lasso: unpenalized logistic fit matches the Newton oracle") {
  Eigen::VectorXd beta_true(5);
  beta_true << 0.8, -0.6, 0.4, 0.0, 0.0;
  const Dataset d = logistic_data(200, 5, beta_true, 177);
  GlmOptions opts;
  opts.tol = 1e-8;
  const GlmFit fit = glm_lasso_fit(d, logistic_loss(), 0.0, opts);
  const Eigen::VectorXd mle = newton_logistic(d.X, d.Y);
  CHECK(fit.converged);
  CHECK((fit.beta - mle).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("glm precision: unit weights reduce to plain nodewise, constant weights rescale") {
  const Dataset d = test_helpers::random_dataset(50, 5, 181);
  const Eigen::VectorXd lambdas = Eigen::VectorXd::Constant(5, 0.2);
  const Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(5);

  const PrecisionEstimate via_glm = glm_precision(d, beta0, squared_loss(), lambdas);
  const PrecisionEstimate plain = precision_estimate(d, lambdas);
  CHECK((via_glm.theta - plain.theta).lpNorm<Eigen::Infinity>() < 1e-12);

  // Logistic at beta = 0: all weights are 1/4, so the weighted nodewise
  // estimate at lambda equals 4x the unweighted one at 4*lambda.
  const PrecisionEstimate logi = glm_precision(d, beta0, logistic_loss(), lambdas);
  const PrecisionEstimate scaled = precision_estimate(d, Eigen::VectorXd::Constant(5, 0.8));
  CHECK((logi.theta - 4.0 * scaled.theta).lpNorm<Eigen::Infinity>() < 1e-9);
  for (int j = 0; j < 5; ++j)
    CHECK(logi.theta(j, j) == doctest::Approx(1.0 / logi.tau_sq[j]).epsilon(1e-12));
}

TEST_CASE("glm precision flags vanishing curvature") {
  Dataset d = test_helpers::random_dataset(30, 3, 183);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(3);
  beta[0] = 50.0;  // saturates the logistic curvature on some rows
  CHECK_THROWS_AS(glm_precision(d, beta, logistic_loss(), Eigen::VectorXd::Constant(3, 0.2)),
                  Error);
}

TEST_CASE("glm desparsify: identities and the score-zero fixed point") {
  Eigen::VectorXd beta_true(4);
  beta_true << 1.0, -0.8, 0.0, 0.0;
  const Dataset d = logistic_data(200, 4, beta_true, 187);
  const LossSpec loss = logistic_loss();

  // At the exact MLE the mean score vanishes, so de-biasing is a no-op.
  const Eigen::VectorXd mle = newton_logistic(d.X, d.Y);
  const auto precision = std::make_shared<const PrecisionEstimate>(
      glm_precision(d, mle, loss, Eigen::VectorXd::Constant(4, 0.1)));
  const GlmDesparsifiedFit at_mle = glm_desparsify(d, mle, precision, loss);
  CHECK((at_mle.beta_breve - at_mle.beta_hat).lpNorm<Eigen::Infinity>() < 1e-8);

  // Penalized fit: de-biased estimate recomputes through the subgradient form.
  const GlmFit fit = glm_lasso_fit(d, loss, 0.05);
  const GlmDesparsifiedFit desp = glm_desparsify(d, fit.beta, precision, loss);
  Eigen::VectorXd dl(d.n());
  const Eigen::VectorXd lin = d.X * fit.beta;
  for (int i = 0; i < d.n(); ++i) dl[i] = loss.dloss(d.Y[i], lin[i]);
  const Eigen::VectorXd grad = d.X.transpose() * dl / d.n();
  CHECK((desp.kappa + grad).lpNorm<Eigen::Infinity>() < 1e-12);
  const Eigen::VectorXd via_kappa = fit.beta + precision->theta * desp.kappa;
  CHECK((desp.beta_breve - via_kappa).lpNorm<Eigen::Infinity>() < 1e-10);

  // Studentization diagonal through the weighted quadratic form.
  const Eigen::MatrixXd sigma_w =
      d.X.transpose() * dl.array().square().matrix().asDiagonal() * d.X / d.n();
  for (int j = 0; j < 4; ++j) {
    const double w = precision->theta.row(j) * sigma_w * precision->theta.row(j).transpose();
    CHECK(desp.w_diag[j] == doctest::Approx(w).epsilon(1e-10));
  }
}

TEST_CASE("glm bootstrap: degenerate scores, determinism, squared-loss cross-check") {
  // Perfect linear fit: every loss derivative is zero, draws collapse.
  Dataset exact;
  exact.X = test_helpers::random_matrix(12, 2, 191);
  Eigen::VectorXd beta(2);
  beta << 0.7, -0.3;
  exact.Y = exact.X * beta;  // residuals are exactly zero at beta
  auto precision = std::make_shared<const PrecisionEstimate>(
      precision_estimate_matrix(exact.X, Eigen::VectorXd::Constant(2, 0.1)));
  const GlmDesparsifiedFit desp = glm_desparsify(exact, beta, precision, squared_loss());
  const BootstrapDistribution zeros = glm_bootstrap(desp, {0, 1}, 150, 7, false);
  for (double v : zeros.draws) CHECK(std::fabs(v) < 1e-10);

  // Seeded determinism.
  Eigen::VectorXd beta_true(3);
  beta_true << 1.0, 0.0, -1.0;
  const Dataset d = logistic_data(60, 3, beta_true, 193);
  const GlmFit fit = glm_lasso_fit(d, logistic_loss(), 0.05);
  auto prec2 = std::make_shared<const PrecisionEstimate>(
      glm_precision(d, fit.beta, logistic_loss(), Eigen::VectorXd::Constant(3, 0.15)));
  const GlmDesparsifiedFit g = glm_desparsify(d, fit.beta, prec2, logistic_loss());
  const BootstrapDistribution b1 = glm_bootstrap(g, {0, 1, 2}, 300, 11, true);
  const BootstrapDistribution b2 = glm_bootstrap(g, {0, 1, 2}, 300, 11, true);
  for (std::size_t i = 0; i < b1.draws.size(); ++i) CHECK(b1.draws[i] == b2.draws[i]);

  // Squared loss: the glm bootstrap with per-observation residual scores
  // equals a hand-rolled multiplier bootstrap on residual-weighted scores.
  Dataset lin = test_helpers::random_dataset(40, 4, 197, false);
  const GlmFit lfit = glm_lasso_fit(lin, squared_loss(), 0.08);
  auto prec3 = std::make_shared<const PrecisionEstimate>(
      precision_estimate_matrix(lin.X, Eigen::VectorXd::Constant(4, 0.2)));
  const GlmDesparsifiedFit gl = glm_desparsify(lin, lfit.beta, prec3, squared_loss());
  const BootstrapDistribution got = glm_bootstrap(gl, {0, 1, 2, 3}, 200, 13, false);

  Eigen::MatrixXd manual = lin.X * prec3->theta.transpose();
  const Eigen::VectorXd resid = lin.X * lfit.beta - lin.Y;  // dloss = a - y
  for (int i = 0; i < lin.n(); ++i) manual.row(i) *= resid[i];
  const BootstrapDistribution expect = multiplier_bootstrap(
      manual, 1.0, Eigen::VectorXd::Ones(4), {0, 1, 2, 3}, BootstrapVariant::nst_two_sided, 200,
      13);
  for (std::size_t i = 0; i < got.draws.size(); ++i)
    CHECK(got.draws[i] == doctest::Approx(expect.draws[i]).epsilon(1e-12));
}

TEST_CASE("glm simultaneous test: degenerate and extreme nulls") {
  Eigen::VectorXd beta_true(3);
  beta_true << 1.2, 0.0, -0.6;
  const Dataset d = logistic_data(120, 3, beta_true, 211);
  const GlmFit fit = glm_lasso_fit(d, logistic_loss(), 0.03);
  auto precision = std::make_shared<const PrecisionEstimate>(
      glm_precision(d, fit.beta, logistic_loss(), Eigen::VectorXd::Constant(3, 0.1)));
  const GlmDesparsifiedFit desp = glm_desparsify(d, fit.beta, precision, logistic_loss());
  const std::vector<int> group = {0, 1, 2};
  const BootstrapDistribution dist = glm_bootstrap(desp, group, 250, 3, true);

  const GlmTestResult at_estimate = glm_simultaneous_test(desp, desp.beta_breve, group, dist, 0.05);
  CHECK(at_estimate.statistic == 0.0);
  CHECK_FALSE(at_estimate.reject);

  Eigen::VectorXd far = desp.beta_breve;
  far.array() += 50.0;
  const GlmTestResult extreme = glm_simultaneous_test(desp, far, group, dist, 0.05);
  CHECK(extreme.reject);
  CHECK(extreme.p_value == 0.0);
  CHECK_THROWS_AS(glm_simultaneous_test(desp, far, {0}, dist, 0.05), Error);
}

TEST_CASE("glm objective decreases along the proximal path") {
  Eigen::VectorXd beta_true(6);
  beta_true << 1.0, -1.0, 0.5, 0.0, 0.0, 0.0;
  const Dataset d = logistic_data(100, 6, beta_true, 199);
  const GlmFit fit = glm_lasso_fit(d, logistic_loss(), 0.02);
  CHECK(fit.converged);
  // Stationarity within the solver tolerance.
  const Eigen::VectorXd lin = d.X * fit.beta;
  Eigen::VectorXd dl(d.n());
  for (int i = 0; i < d.n(); ++i) dl[i] = logistic_loss().dloss(d.Y[i], lin[i]);
  const Eigen::VectorXd grad = d.X.transpose() * dl / d.n();
  for (int j = 0; j < 6; ++j) {
    if (fit.beta[j] != 0.0)
      CHECK(std::fabs(grad[j] + 0.02 * (fit.beta[j] > 0 ? 1.0 : -1.0)) < 1e-5);
    else
      CHECK(std::fabs(grad[j]) < 0.02 + 1e-5);
  }
}
