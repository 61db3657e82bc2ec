#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdinfer/dataset.hpp"
#include "hdinfer/pipeline.hpp"
#include "hdinfer/procedures.hpp"

namespace hdinfer {

enum class CovarianceKind { toeplitz, exchangeable, block_diagonal, identity };
enum class ErrorDist { student_t4_scaled, gamma41_standardized, gaussian };
enum class CoefPattern { unif_first, unif_random_support, fixed_magnitude_first };

// Signal magnitudes that depend on (n, p); resolved at scenario setup.
enum class CoefValueRule { literal, sqrt_10_logp_over_n, ten_sqrt_logp_over_n };

struct Scenario {
  std::string name = "scenario";
  int n = 100;
  int p = 120;
  int s0 = 3;
  CovarianceKind covariance = CovarianceKind::toeplitz;
  double rho = 0.9;
  int block = 5;
  ErrorDist errors = ErrorDist::student_t4_scaled;
  CoefPattern pattern = CoefPattern::unif_first;
  double coef_a = 0.0;
  double coef_b = 2.0;
  CoefValueRule coef_rule = CoefValueRule::literal;
  std::uint64_t seed = 1;
  std::map<std::string, std::string> raw;  // parsed key/value pairs, for provenance
};

Eigen::MatrixXd make_covariance(const Scenario& sc);

/// n i.i.d. rows from N(0, Sigma) via Cholesky; same seed, same design.
Eigen::MatrixXd sample_design(const Eigen::MatrixXd& sigma, int n, std::uint64_t seed);

/// Unit-variance error draws: t(4)/sqrt(2), (Gamma(4,1)-4)/2, or N(0,1).
Eigen::VectorXd sample_errors(ErrorDist dist, int n, std::uint64_t seed);

struct Coefficients {
  Eigen::VectorXd beta0;
  std::vector<int> support;
};
Coefficients make_coefficients(const Scenario& sc, std::uint64_t seed);

enum class SimTask { ci_coverage, sparse_test, recovery, stepdown_fwer };

SimTask parse_sim_task(const std::string& name);
const char* sim_task_name(SimTask task);

struct SimOptions {
  std::vector<double> alphas = {0.05, 0.01};
  double tau = 2.0;                        // recovery threshold
  double c0 = 0.2;                         // three-step split fraction
  ScreenMode screen = ScreenMode::marginal;
  int k1 = -1;                             // iterative screening stage-one size
  bool redraw_design = false;              // redraw X each replication
  double max_failure_rate = 0.01;
  PipelineOptions pipeline;
};

struct SummaryRecord {
  std::string scenario;
  std::string task;
  std::string method;
  std::string group;
  double alpha = 0.0;   // 0 when not applicable
  std::string metric;
  double value = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();  // binomial SE when applicable
  int reps_used = 0;
};

struct SummaryTable {
  std::vector<SummaryRecord> records;
  std::string scenario;
  std::string task;
  int reps = 0;
  int reps_failed = 0;
  int bootstrap_draws = 0;
  std::uint64_t seed = 0;
  double wall_time_seconds = 0.0;
  std::map<std::string, std::string> provenance;  // scenario config echo
};

// Monte Carlo driver: X (and the nodewise estimate) fixed per scenario seed,
// errors redrawn per replication from counter-based streams, results
// aggregated in replication order.
SummaryTable run_scenario(const Scenario& sc, SimTask task, int reps, int B,
                          std::uint64_t master_seed, const SimOptions& opts = {});

/// Parses the key = value scenario format; unknown keys are rejected.
Scenario parse_scenario_config(const std::string& text);
Scenario load_scenario_config(const std::string& path);

}  // namespace hdinfer
