#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hdinfer/desparsify.hpp"

namespace hdinfer {

enum class BootstrapVariant {
  nst_one_sided,  // max_j  sum_i Theta_j'x_i sigma e_i / sqrt(n)
  nst_two_sided,  // max_j |...|
  st_one_sided,   // max_j  ... / sqrt(omega_jj)
  st_two_sided,   // max_j |...| / sqrt(omega_jj)
};

struct BootstrapDistribution {
  std::vector<double> draws;  // sorted ascending
  BootstrapVariant variant = BootstrapVariant::nst_two_sided;
  std::vector<int> group;
  int num_draws = 0;
  std::uint64_t seed = 0;
};

// Multiplier bootstrap of the max-type statistic. score_basis column j holds
// X Theta_j; replicate b multiplies rows by N(0,1) draws from the
// counter-based stream (seed, b), so results are reproducible under any
// parallel schedule.
BootstrapDistribution multiplier_bootstrap(const Eigen::MatrixXd& score_basis, double sigma_eps,
                                           const Eigen::VectorXd& omega_diag,
                                           const std::vector<int>& group, BootstrapVariant variant,
                                           int B, std::uint64_t seed);

/// Empirical (row resampling) bootstrap of the two-sided non-studentized max.
BootstrapDistribution empirical_bootstrap(const Eigen::MatrixXd& score_basis, double sigma_eps,
                                          const std::vector<int>& group, int B, std::uint64_t seed);

/// Order-statistic critical value: draws[ceil((1-alpha) B)] (1-indexed).
double critical_value(const BootstrapDistribution& dist, double alpha);

/// Quantile of the limiting law F(x) = exp(-exp(-x/2)/sqrt(pi)).
double extreme_value_quantile(double alpha);

// Threshold for the squared studentized max under the extreme-value
// approximation: 2 log m - log log m + q_alpha.
double extreme_value_critical(double alpha, int group_size);

struct TestResult {
  bool reject = false;
  double statistic = 0.0;
  double critical = 0.0;
  double p_value = 1.0;
};

// max-type test of b_j = beta_tilde_j for all j in the group; the statistic
// (sided-ness, studentization) follows dist.variant.
TestResult simultaneous_test(const DesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                             const std::vector<int>& group, const BootstrapDistribution& dist,
                             double alpha);

// All B replicates of the signed, unscaled scores sharing one multiplier
// stream: S(b, c) = sum_i basis(i, group[c]) e_i^(b) / sqrt(n). Step-down
// reuses this matrix so critical values over shrinking sets stay monotone.
Eigen::MatrixXd bootstrap_scores(const Eigen::MatrixXd& score_basis, const std::vector<int>& group,
                                 int B, std::uint64_t seed);

}  // namespace hdinfer
