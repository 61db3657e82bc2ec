#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdinfer/bootstrap.hpp"
#include "hdinfer/dataset.hpp"
#include "hdinfer/nodewise.hpp"

namespace hdinfer {

/// Pointwise loss L(y, a) with first and second derivatives in a.
struct LossSpec {
  std::function<double(double, double)> loss;
  std::function<double(double, double)> dloss;
  std::function<double(double, double)> d2loss;
  std::string name;
};

/// Binary logistic loss, overflow-safe for large |a|.
LossSpec logistic_loss();

/// (y - a)^2 / 2; used to cross-check against the linear Lasso.
LossSpec squared_loss();

struct GlmOptions {
  double tol = 1e-5;  // subgradient residual
  int max_iter = 20000;
};

struct GlmFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  std::vector<int> active_set;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Proximal gradient (monotone accelerated) for mean loss + lambda*||beta||_1.
GlmFit glm_lasso_fit(const Dataset& data, const LossSpec& loss, double lambda,
                     const GlmOptions& opts = {});

// Nodewise precision estimate of the curvature matrix E_n[dd L] at beta_hat,
// computed on the row-weighted design sqrt(dd L_i) x_i.
PrecisionEstimate glm_precision(const Dataset& data, const Eigen::VectorXd& beta_hat,
                                const LossSpec& loss, const Eigen::VectorXd& lambdas,
                                const LassoOptions& opts = {});

struct GlmDesparsifiedFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd beta_breve;  // beta_hat - Theta * E_n[dL x]
  Eigen::VectorXd kappa;       // -E_n[dL x], the penalty subgradient at beta_hat
  Eigen::VectorXd w_diag;      // Theta_j' (X' diag(dL^2) X / n) Theta_j
  std::shared_ptr<const PrecisionEstimate> precision;
  std::shared_ptr<const Eigen::MatrixXd> score_basis;  // diag(dL) X Theta'
  int n = 0;

  int p() const { return static_cast<int>(beta_breve.size()); }
};

GlmDesparsifiedFit glm_desparsify(const Dataset& data, const Eigen::VectorXd& beta_hat,
                                  std::shared_ptr<const PrecisionEstimate> precision,
                                  const LossSpec& loss);

/// Two-sided multiplier bootstrap with per-observation loss-derivative scores.
BootstrapDistribution glm_bootstrap(const GlmDesparsifiedFit& fit, const std::vector<int>& group,
                                    int B, std::uint64_t seed, bool studentized);

struct GlmTestResult {
  bool reject = false;
  double statistic = 0.0;
  double critical = 0.0;
  double p_value = 1.0;
};

GlmTestResult glm_simultaneous_test(const GlmDesparsifiedFit& fit, const Eigen::VectorXd& beta_tilde,
                                    const std::vector<int>& group, const BootstrapDistribution& dist,
                                    double alpha);

}  // namespace hdinfer
