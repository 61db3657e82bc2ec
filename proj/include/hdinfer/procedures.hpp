#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hdinfer/bootstrap.hpp"
#include "hdinfer/dataset.hpp"
#include "hdinfer/desparsify.hpp"
#include "hdinfer/pipeline.hpp"

namespace hdinfer {

struct RecoveryResult {
  std::vector<int> selected;       // {j in G_tilde : |b_j| > threshold_j}
  double tau = 0.0;
  std::vector<double> thresholds;  // per candidate, aligned with G_tilde
};

// Thresholds the de-biased estimates at sqrt(tau * omega_jj * log(p) / n);
// p is the full model dimension even when G_tilde is a strict subset.
RecoveryResult support_recover(const DesparsifiedFit& fit, const std::vector<int>& G_tilde,
                               double tau = 2.0);

/// |A ∩ B| / sqrt(|A| |B|); 0 when the estimate is empty. B must be nonempty.
double similarity(const std::vector<int>& S_hat, const std::vector<int>& S0);

/// Seeded split into |D1| = floor(c0*n) and its complement; both parts >= 10.
std::pair<std::vector<int>, std::vector<int>> split_sample(int n, double c0, std::uint64_t seed);

// Top-k columns by |X1'Y1| on the screening subsample; boundary ties go to
// the smaller index. k >= p keeps every column.
std::vector<int> marginal_screen(const Eigen::MatrixXd& X1, const Eigen::VectorXd& Y1, int k);

// Two-stage screening: k1 variables picked by Lasso coefficient magnitude
// (padded by marginal screening if the fit is sparser than k1), then the
// marginal rule on Lasso residuals over the remaining columns up to size k.
std::vector<int> iterative_screen(const Eigen::MatrixXd& X1, const Eigen::VectorXd& Y1, int k,
                                  int k1, const LassoOptions& opts = {});

enum class ScreenMode { marginal, iterative };
enum class ScreenSize { d2_minus_one, d2_over_log };

struct ThreeStepOptions {
  double c0 = 0.2;
  ScreenMode mode = ScreenMode::marginal;
  ScreenSize size = ScreenSize::d2_minus_one;
  int k1 = -1;  // iterative first-stage size; -1 -> floor(k/2)
  bool studentized = false;
  PipelineOptions pipeline;
};

struct ThreeStepResult {
  bool reject = false;
  double statistic = 0.0;
  double critical = 0.0;
  double p_value = 1.0;
  std::vector<int> screened;       // S_gamma, original column ids
  std::vector<int> reduced_group;  // G_tilde ∩ S_gamma, original column ids
  std::vector<int> d1, d2;
};

// Split / screen on D1 / test beta_j = 0 simultaneously over the surviving
// group on D2. An empty reduced group returns statistic 0 and no rejection.
ThreeStepResult three_step_test(const Dataset& data, const std::vector<int>& G_tilde, double alpha,
                                int B, std::uint64_t seed, const ThreeStepOptions& opts = {});

enum class Sided { one, two };

struct StepdownStep {
  std::vector<int> active;
  double critical = 0.0;
};

struct StepdownResult {
  std::vector<int> rejected;
  std::vector<StepdownStep> steps;
  double alpha = 0.0;
};

// Romano-Wolf step-down with bootstrap critical values. All steps share one
// multiplier stream, which keeps c_eta monotone over shrinking active sets.
StepdownResult stepdown_fwer(const DesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                             const std::vector<int>& G, double alpha, int B, std::uint64_t seed,
                             Sided sided, bool studentized = false);

/// Holm's procedure on Gaussian-tail p-values of the studentized statistics.
std::vector<int> bonferroni_holm(const DesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                                 const std::vector<int>& G, double alpha);

}  // namespace hdinfer
