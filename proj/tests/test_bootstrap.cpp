#include <doctest.h>

#include <cmath>
#include <memory>

#include "hdinfer/bootstrap.hpp"
#include "hdinfer/errors.hpp"
#include "hdinfer/parallel.hpp"
#include "hdinfer/sim.hpp"
#include "helpers.hpp"

using namespace hdinfer;

namespace {

DesparsifiedFit small_fit(int n, int p, std::uint64_t seed) {
  const Dataset d = test_helpers::random_dataset(n, p, seed);
  const ScaledLassoFit sc = scaled_lasso_fit(d, universal_lambda0(n, p));
  const auto precision = std::make_shared<const PrecisionEstimate>(precision_estimate(d, 0.25));
  return desparsify(d, sc.fit, precision, sc.sigma_hat_modified * sc.sigma_hat_modified);
}

}  // namespace

TEST_CASE("multiplier bootstrap: single-column draws match the closed-form normal scale") {
  const int n = 20;
  Eigen::MatrixXd basis = test_helpers::random_matrix(n, 1, 101);
  const double sigma = 1.7;
  const Eigen::VectorXd omega = Eigen::VectorXd::Ones(1);
  const BootstrapDistribution dist = multiplier_bootstrap(
      basis, sigma, omega, {0}, BootstrapVariant::nst_one_sided, 100000, 5);

  double mean = 0.0;
  for (double v : dist.draws) mean += v;
  mean /= dist.draws.size();
  double var = 0.0;
  for (double v : dist.draws) var += (v - mean) * (v - mean);
  var /= dist.draws.size();

  const double expected_sd = sigma * basis.col(0).norm() / std::sqrt(static_cast<double>(n));
  CHECK(std::fabs(std::sqrt(var) - expected_sd) / expected_sd < 0.03);
  CHECK(std::fabs(mean) < 0.02 * expected_sd * 10);
}

TEST_CASE("multiplier bootstrap: zero scores give zero draws") {
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(10, 3);
  const Eigen::VectorXd omega = Eigen::VectorXd::Ones(3);
  const BootstrapDistribution dist =
      multiplier_bootstrap(basis, 1.0, omega, {0, 1, 2}, BootstrapVariant::nst_two_sided, 200, 9);
  for (double v : dist.draws) CHECK(v == 0.0);
}

TEST_CASE("multiplier bootstrap: bit-identical across runs and thread counts") {
  Eigen::MatrixXd basis = test_helpers::random_matrix(30, 6, 103);
  const Eigen::VectorXd omega = Eigen::VectorXd::Ones(6);
  const std::vector<int> group = {0, 2, 4};

  set_max_threads(1);
  const BootstrapDistribution serial = multiplier_bootstrap(
      basis, 1.0, omega, group, BootstrapVariant::st_two_sided, 500, 77);
  set_max_threads(2);
  const BootstrapDistribution parallel = multiplier_bootstrap(
      basis, 1.0, omega, group, BootstrapVariant::st_two_sided, 500, 77);
  set_max_threads(0);

  REQUIRE(serial.draws.size() == parallel.draws.size());
  for (std::size_t i = 0; i < serial.draws.size(); ++i)
    CHECK(serial.draws[i] == parallel.draws[i]);
}

TEST_CASE("critical value: order statistics and monotonicity") {
  BootstrapDistribution dist;
  dist.num_draws = 1000;
  dist.draws.resize(1000);
  for (int i = 0; i < 1000; ++i) dist.draws[i] = i + 1.0;  // already sorted
  CHECK(critical_value(dist, 0.05) == 950.0);
  CHECK(critical_value(dist, 0.01) >= critical_value(dist, 0.05));
  CHECK(critical_value(dist, 0.05) >= critical_value(dist, 0.10));

  BootstrapDistribution flat;
  flat.num_draws = 100;
  flat.draws.assign(100, 3.25);
  for (double alpha : {0.01, 0.05, 0.5, 0.99}) CHECK(critical_value(flat, alpha) == 3.25);
  CHECK_THROWS_AS(critical_value(flat, 0.0), Error);
}

TEST_CASE("empirical bootstrap: single observation degenerates to zero") {
  Eigen::MatrixXd basis = test_helpers::random_matrix(1, 2, 107);
  const BootstrapDistribution dist = empirical_bootstrap(basis, 1.0, {0, 1}, 150, 3);
  for (double v : dist.draws) CHECK(v == 0.0);
}

TEST_CASE("empirical bootstrap: deterministic and close to the multiplier version") {
  Scenario sc;
  sc.n = 100;
  sc.p = 20;
  sc.covariance = CovarianceKind::toeplitz;
  sc.rho = 0.9;
  Dataset d;
  d.X = sample_design(make_covariance(sc), sc.n, 109);
  d.Y = Eigen::VectorXd::Zero(sc.n);
  d = standardize(d);
  const auto precision = std::make_shared<const PrecisionEstimate>(precision_estimate(d, 0.2));
  const Eigen::MatrixXd basis = d.X * precision->theta.transpose();
  std::vector<int> all(sc.p);
  for (int j = 0; j < sc.p; ++j) all[j] = j;

  const BootstrapDistribution e1 = empirical_bootstrap(basis, 1.0, all, 2000, 11);
  const BootstrapDistribution e2 = empirical_bootstrap(basis, 1.0, all, 2000, 11);
  for (std::size_t i = 0; i < e1.draws.size(); ++i) CHECK(e1.draws[i] == e2.draws[i]);

  const Eigen::VectorXd omega = basis.colwise().squaredNorm().transpose() / sc.n;
  const BootstrapDistribution m =
      multiplier_bootstrap(basis, 1.0, omega, all, BootstrapVariant::nst_two_sided, 2000, 11);
  const double ce = critical_value(e1, 0.05);
  const double cm = critical_value(m, 0.05);
  CHECK(std::fabs(ce - cm) / cm < 0.10);
}

TEST_CASE("extreme value law: quantile round trip and reference points") {
  const auto F = [](double x) { return std::exp(-std::exp(-x / 2.0) / std::sqrt(M_PI)); };
  for (double alpha : {0.01, 0.05, 0.10})
    CHECK(F(extreme_value_quantile(alpha)) == doctest::Approx(1.0 - alpha).epsilon(1e-12));
  CHECK(F(0.0) == doctest::Approx(std::exp(-1.0 / std::sqrt(M_PI))).epsilon(1e-15));
  CHECK(extreme_value_quantile(0.01) > extreme_value_quantile(0.05));
  CHECK(extreme_value_quantile(0.05) > extreme_value_quantile(0.10));

  const double t_sq = extreme_value_critical(0.05, 120);
  CHECK(t_sq == doctest::Approx(2.0 * std::log(120.0) - std::log(std::log(120.0)) +
                                extreme_value_quantile(0.05)));
  CHECK_THROWS_AS(extreme_value_critical(0.05, 1), Error);
  CHECK_THROWS_AS(extreme_value_quantile(1.5), Error);
}

TEST_CASE("simultaneous test: degenerate statistics and tail behavior") {
  DesparsifiedFit fit = small_fit(40, 8, 111);
  const std::vector<int> group = {0, 3, 5};
  const BootstrapDistribution dist =
      multiplier_bootstrap(*fit.score_basis, std::sqrt(fit.sigma_eps_sq), fit.omega_diag, group,
                           BootstrapVariant::nst_two_sided, 400, 13);

  // Null equal to the estimate: statistic 0, never rejected.
  const TestResult at_estimate = simultaneous_test(fit, fit.beta_breve, group, dist, 0.05);
  CHECK(at_estimate.statistic == 0.0);
  CHECK_FALSE(at_estimate.reject);
  CHECK(at_estimate.p_value == 1.0);

  // Null far away: statistic above every draw.
  Eigen::VectorXd far = fit.beta_breve;
  far.array() += 100.0;
  const TestResult extreme = simultaneous_test(fit, far, group, dist, 0.05);
  CHECK(extreme.p_value == 0.0);
  CHECK(extreme.reject);

  // Group mismatch guard.
  CHECK_THROWS_AS(simultaneous_test(fit, far, {0, 1}, dist, 0.05), Error);
}

TEST_CASE("simultaneous test: reject iff p-value clears the order-statistic cut") {
  DesparsifiedFit fit = small_fit(30, 10, 113);
  std::vector<int> group(10);
  for (int j = 0; j < 10; ++j) group[j] = j;
  const int B = 250;
  const BootstrapDistribution dist =
      multiplier_bootstrap(*fit.score_basis, std::sqrt(fit.sigma_eps_sq), fit.omega_diag, group,
                           BootstrapVariant::st_two_sided, B, 17);

  for (double alpha : {0.01, 0.05, 0.2, 0.5}) {
    const long k = static_cast<long>(std::ceil((1.0 - alpha) * B));
    for (double shift : {0.0, 0.05, 0.1, 0.3, 1.0}) {
      Eigen::VectorXd null_vec = fit.beta_breve;
      null_vec.array() -= shift;
      const TestResult res = simultaneous_test(fit, null_vec, group, dist, alpha);
      CHECK(res.p_value >= 0.0);
      CHECK(res.p_value <= 1.0);
      const bool by_pvalue = res.p_value * B <= B - k;
      CHECK(res.reject == by_pvalue);
    }
  }
}

TEST_CASE("bootstrap scores: subset maxima are dominated under the shared stream") {
  Eigen::MatrixXd basis = test_helpers::random_matrix(25, 8, 117);
  std::vector<int> big = {0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> small = {1, 4, 6};
  const int B = 300;
  const Eigen::MatrixXd s_big = bootstrap_scores(basis, big, B, 23);
  const Eigen::MatrixXd s_small = bootstrap_scores(basis, small, B, 23);

  for (int b = 0; b < B; ++b) {
    const double max_big = s_big.row(b).cwiseAbs().maxCoeff();
    const double max_small = s_small.row(b).cwiseAbs().maxCoeff();
    CHECK(max_small <= max_big + 1e-15);
    // Shared stream: identical scores for shared columns.
    CHECK(s_small(b, 0) == s_big(b, 1));
    CHECK(s_small(b, 2) == s_big(b, 6));
  }
}
