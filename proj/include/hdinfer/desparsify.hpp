#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "hdinfer/dataset.hpp"
#include "hdinfer/nodewise.hpp"
#include "hdinfer/solvers.hpp"

namespace hdinfer {

// De-biased estimator and its variance diagonal:
//   beta_breve = beta_hat + Theta X'(Y - X beta_hat)/n
//   omega_diag[j] = sigma_eps_sq * Theta_j' (X'X/n) Theta_j
struct DesparsifiedFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd beta_breve;
  Eigen::VectorXd omega_diag;
  double sigma_eps_sq = 0.0;
  Eigen::VectorXd delta;  // empty until remainder_diagnostic fills it
  std::shared_ptr<const PrecisionEstimate> precision;
  std::shared_ptr<const Eigen::MatrixXd> score_basis;  // n x p, col j = X Theta_j
  int n = 0;

  int p() const { return static_cast<int>(beta_breve.size()); }
};

// score_basis may be passed in when X and Theta are fixed across many calls
// (the simulation harness); otherwise it is computed here.
DesparsifiedFit desparsify(const Dataset& data, const LassoFit& lasso,
                           std::shared_ptr<const PrecisionEstimate> precision,
                           double sigma_eps_sq,
                           std::shared_ptr<const Eigen::MatrixXd> score_basis = nullptr);

// Simulation-only remainder diagnostics against the known truth:
//   delta = -sqrt(n) (Theta Sigma_hat - I)(beta_hat - beta_true)
//   delta_star_j = delta_j / sqrt(omega_jj)
// Also cross-checks the expansion sqrt(n)(beta_breve - beta_true)
// = Theta X'(Y - X beta_true)/sqrt(n) + delta to 1e-8.
struct RemainderDiagnostic {
  Eigen::VectorXd delta;
  Eigen::VectorXd delta_star;
};
RemainderDiagnostic remainder_diagnostic(DesparsifiedFit& fit, const Dataset& data,
                                         const Eigen::VectorXd& beta_true);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Simultaneous intervals over a group at a bootstrap critical value:
// non-studentized [b_j +- crit/sqrt(n)], studentized [b_j +- crit*sqrt(omega_jj/n)].
std::vector<Interval> simultaneous_ci(const DesparsifiedFit& fit, const std::vector<int>& group,
                                      double critical, bool studentized);

}  // namespace hdinfer
