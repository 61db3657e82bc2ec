#include "hdinfer/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "hdinfer/bootstrap.hpp"
#include "hdinfer/errors.hpp"
#include "hdinfer/parallel.hpp"
#include "hdinfer/rng.hpp"

namespace hdinfer {

Eigen::MatrixXd make_covariance(const Scenario& sc) {
  const int p = sc.p;
  if (p < 1) fail(ErrorCode::invalid_scenario, "p must be positive");
  if (!(sc.rho > -1.0 && sc.rho < 1.0)) fail(ErrorCode::invalid_scenario, "rho must be in (-1,1)");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  switch (sc.covariance) {
    case CovarianceKind::identity:
      break;
    case CovarianceKind::toeplitz:
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(sc.rho, std::abs(i - j));
      break;
    case CovarianceKind::exchangeable:
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          if (i != j) sigma(i, j) = sc.rho;
      break;
    case CovarianceKind::block_diagonal: {
      const int bs = sc.block;
      if (bs < 2) fail(ErrorCode::invalid_scenario, "block size must be >= 2");
      const int blocks = p / bs;  // remainder columns stay uncorrelated
      for (int k = 0; k < blocks; ++k)
        for (int i = k * bs; i < (k + 1) * bs; ++i)
          for (int j = k * bs; j < (k + 1) * bs; ++j)
            if (i != j) sigma(i, j) = sc.rho;
      break;
    }
  }
  return sigma;
}

Eigen::MatrixXd sample_design(const Eigen::MatrixXd& sigma, int n, std::uint64_t seed) {
  const int p = static_cast<int>(sigma.rows());
  if (sigma.cols() != p) fail(ErrorCode::dimension_mismatch, "covariance must be square");

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jittered = sigma + 1e-10 * Eigen::MatrixXd::Identity(p, p);
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::not_positive_definite, "covariance is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();

  RngStream rng(derive_seed(seed, rng_tag::design), 0);
  Eigen::MatrixXd Z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) Z(i, j) = rng.normal();
  return Z * L.transpose();
}

Eigen::VectorXd sample_errors(ErrorDist dist, int n, std::uint64_t seed) {
  RngStream rng(derive_seed(seed, rng_tag::errors), 0);
  Eigen::VectorXd eps(n);
  switch (dist) {
    case ErrorDist::gaussian:
      for (int i = 0; i < n; ++i) eps[i] = rng.normal();
      break;
    case ErrorDist::student_t4_scaled:
      // t(4) = Z / sqrt(chi2_4 / 4); variance 2, so divide by sqrt(2).
      for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        const double chi2 = -2.0 * std::log(rng.uniform() * rng.uniform());
        eps[i] = z / std::sqrt(chi2 / 4.0) / std::sqrt(2.0);
      }
      break;
    case ErrorDist::gamma41_standardized:
      // Gamma(4,1) as a sum of four exponentials; (G - 4)/2 has mean 0, var 1.
      for (int i = 0; i < n; ++i) {
        const double g = -std::log(rng.uniform() * rng.uniform() * rng.uniform() * rng.uniform());
        eps[i] = (g - 4.0) / 2.0;
      }
      break;
  }
  return eps;
}

Coefficients make_coefficients(const Scenario& sc, std::uint64_t seed) {
  if (sc.s0 < 0 || sc.s0 > sc.p) fail(ErrorCode::invalid_scenario, "need 0 <= s0 <= p");
  RngStream rng(derive_seed(seed, rng_tag::coefficients), 0);

  double value = sc.coef_a;
  switch (sc.coef_rule) {
    case CoefValueRule::literal: break;
    case CoefValueRule::sqrt_10_logp_over_n:
      value = std::sqrt(10.0 * std::log(static_cast<double>(sc.p)) / sc.n);
      break;
    case CoefValueRule::ten_sqrt_logp_over_n:
      value = 10.0 * std::sqrt(std::log(static_cast<double>(sc.p)) / sc.n);
      break;
  }

  Coefficients out;
  out.beta0 = Eigen::VectorXd::Zero(sc.p);
  if (sc.s0 == 0) return out;

  if (sc.pattern == CoefPattern::unif_random_support) {
    std::vector<int> idx(sc.p);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < sc.s0; ++i)
      std::swap(idx[i], idx[i + rng.uniform_index(static_cast<std::uint64_t>(sc.p - i))]);
    out.support.assign(idx.begin(), idx.begin() + sc.s0);
    std::sort(out.support.begin(), out.support.end());
  } else {
    for (int j = 0; j < sc.s0; ++j) out.support.push_back(j);
  }

  for (int j : out.support) {
    if (sc.pattern == CoefPattern::fixed_magnitude_first)
      out.beta0[j] = value;
    else
      out.beta0[j] = sc.coef_a + (sc.coef_b - sc.coef_a) * rng.uniform();
  }
  return out;
}

SimTask parse_sim_task(const std::string& name) {
  if (name == "ci_coverage") return SimTask::ci_coverage;
  if (name == "sparse_test") return SimTask::sparse_test;
  if (name == "recovery") return SimTask::recovery;
  if (name == "stepdown_fwer") return SimTask::stepdown_fwer;
  fail(ErrorCode::invalid_scenario, "unknown task '" + name + "'");
}

const char* sim_task_name(SimTask task) {
  switch (task) {
    case SimTask::ci_coverage: return "ci_coverage";
    case SimTask::sparse_test: return "sparse_test";
    case SimTask::recovery: return "recovery";
    case SimTask::stepdown_fwer: return "stepdown_fwer";
  }
  return "unknown";
}

namespace {

void standardize_columns(Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  for (int j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / n);
    if (sd <= 1e-12)
      fail(ErrorCode::constant_column, "generated design has a constant column");
    X.col(j) = (X.col(j).array() - mean) / sd;
  }
}

struct ScenarioCache {
  Dataset data;  // standardized X; Y filled per replication
  Eigen::MatrixXd xtx;
  Eigen::VectorXd beta0;
  std::vector<int> support;
  Eigen::VectorXd x_beta0;
  std::shared_ptr<const PrecisionEstimate> precision;
  std::shared_ptr<const Eigen::MatrixXd> score_basis;
  double nodewise_lambda = 0.0;
  double lambda0 = 0.0;
};

ScenarioCache build_cache(const Scenario& sc, const SimOptions& opts) {
  ScenarioCache cache;
  const Eigen::MatrixXd sigma = make_covariance(sc);
  Eigen::MatrixXd X = sample_design(sigma, sc.n, sc.seed);
  standardize_columns(X);

  cache.data.X = std::move(X);
  cache.data.Y = Eigen::VectorXd::Zero(sc.n);
  cache.data.standardized = true;
  cache.data.column_means = Eigen::VectorXd::Zero(sc.p);
  cache.data.column_sds = Eigen::VectorXd::Ones(sc.p);

  const Coefficients coef = make_coefficients(sc, sc.seed);
  cache.beta0 = coef.beta0;
  cache.support = coef.support;
  cache.x_beta0 = cache.data.X * cache.beta0;
  cache.xtx = cache.data.X.transpose() * cache.data.X / sc.n;

  cache.lambda0 =
      opts.pipeline.lambda0 > 0.0 ? opts.pipeline.lambda0 : universal_lambda0(sc.n, sc.p);
  cache.nodewise_lambda = opts.pipeline.nodewise_lambda;
  if (cache.nodewise_lambda <= 0.0)
    cache.nodewise_lambda =
        shared_cv_lambda_nodewise(cache.data.X, derive_seed(sc.seed, rng_tag::cv_folds),
                                  opts.pipeline.cv, opts.pipeline.lasso)
            .first;
  cache.precision = std::make_shared<const PrecisionEstimate>(precision_estimate(
      cache.data, Eigen::VectorXd::Constant(sc.p, cache.nodewise_lambda), opts.pipeline.lasso));
  cache.score_basis =
      std::make_shared<const Eigen::MatrixXd>(cache.data.X * cache.precision->theta.transpose());
  return cache;
}

// Per-replication fit sharing the cached design, Gram and precision estimate.
DesparsifiedFit replicate_fit(const ScenarioCache& cache, const Eigen::VectorXd& y_centered,
                              const SimOptions& opts, ScaledLassoFit* scaled_out = nullptr) {
  const int n = static_cast<int>(y_centered.size());
  const Eigen::VectorXd xty = cache.data.X.transpose() * y_centered / n;
  const double yty = y_centered.squaredNorm() / n;

  const ScaledLassoFit scaled =
      scaled_lasso_gram(cache.xtx, xty, yty, n, cache.lambda0, opts.pipeline.lasso);
  const double sigma =
      opts.pipeline.use_modified_sigma ? scaled.sigma_hat_modified : scaled.sigma_hat;

  DesparsifiedFit fit;
  fit.beta_hat = scaled.beta_sc;
  fit.sigma_eps_sq = sigma * sigma;
  fit.precision = cache.precision;
  fit.score_basis = cache.score_basis;
  fit.n = n;
  const Eigen::VectorXd corr = xty - cache.xtx * scaled.beta_sc;
  fit.beta_breve = scaled.beta_sc + cache.precision->theta * corr;
  fit.omega_diag =
      fit.sigma_eps_sq * cache.score_basis->colwise().squaredNorm().transpose() / n;
  if (scaled_out) *scaled_out = scaled;
  return fit;
}

Eigen::VectorXd replicate_response(const ScenarioCache& cache, const Scenario& sc,
                                   std::uint64_t master_seed, int rep) {
  const Eigen::VectorXd eps =
      sample_errors(sc.errors, sc.n, derive_seed(master_seed, rng_tag::errors, rep));
  Eigen::VectorXd y = cache.x_beta0 + eps;
  return y.array() - y.mean();
}

double binomial_se(double phat, int reps) {
  return reps > 0 ? std::sqrt(std::max(phat * (1.0 - phat), 0.0) / reps)
                  : std::numeric_limits<double>::quiet_NaN();
}

struct GroupSpec {
  std::string name;
  std::vector<int> indices;
};

std::vector<GroupSpec> coverage_groups(int p, const std::vector<int>& support) {
  std::vector<GroupSpec> groups;
  std::set<int> s0(support.begin(), support.end());
  std::vector<int> comp;
  for (int j = 0; j < p; ++j)
    if (!s0.count(j)) comp.push_back(j);
  if (!support.empty()) groups.push_back({"S0", support});
  if (!comp.empty()) groups.push_back({"S0c", comp});
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);
  groups.push_back({"all", all});
  return groups;
}

std::vector<GroupSpec> sparse_test_groups(int p, const std::vector<int>& support) {
  std::vector<GroupSpec> groups;
  std::set<int> s0(support.begin(), support.end());
  std::vector<int> comp;
  for (int j = 0; j < p; ++j)
    if (!s0.count(j)) comp.push_back(j);
  if (comp.empty()) fail(ErrorCode::invalid_scenario, "sparse test needs a nonempty null group");
  groups.push_back({"S0c", comp});
  if (!support.empty()) {
    std::vector<int> g = comp;
    g.push_back(support.back());
    std::sort(g.begin(), g.end());
    groups.push_back({"S0c+1sig", g});
  }
  if (support.size() >= 2) {
    std::vector<int> g = comp;
    g.push_back(support[support.size() - 2]);
    g.push_back(support.back());
    std::sort(g.begin(), g.end());
    groups.push_back({"S0c+2sig", g});
  }
  return groups;
}

long quantile_index(double alpha, int B) {
  long idx = static_cast<long>(std::ceil((1.0 - alpha) * B));
  return std::clamp(idx, 1L, static_cast<long>(B)) - 1;  // 0-based
}

}  // namespace

SummaryTable run_scenario(const Scenario& sc, SimTask task, int reps, int B,
                          std::uint64_t master_seed, const SimOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();

  SummaryTable table;
  table.scenario = sc.name;
  table.task = sim_task_name(task);
  table.reps = reps;
  table.bootstrap_draws = B;
  table.seed = master_seed;
  table.provenance = sc.raw;
  if (reps < 0) fail(ErrorCode::invalid_argument, "reps must be nonnegative");
  if (reps == 0) return table;

  const ScenarioCache base_cache = build_cache(sc, opts);
  const int p = sc.p;
  const int n = sc.n;
  const double root_n = std::sqrt(static_cast<double>(n));
  const std::vector<double>& alphas = opts.alphas;

  // Per-replication metric slots: filled independently, reduced in order.
  struct RepOutcome {
    bool failed = false;
    std::vector<double> values;
  };
  std::vector<RepOutcome> outcomes(reps);

  // Metric layout per task, fixed up front so slots align.
  std::vector<GroupSpec> groups;
  std::vector<std::string> methods;
  if (task == SimTask::ci_coverage) {
    groups = coverage_groups(p, base_cache.support);
    methods = {"NST", "ST", "EX"};
  } else if (task == SimTask::sparse_test) {
    groups = sparse_test_groups(p, base_cache.support);
    methods = {"onestep_NST", "onestep_ST", "threestep_NST", "threestep_ST"};
  } else if (task == SimTask::stepdown_fwer) {
    methods = {"stepdown_NST", "stepdown_ST", "BH"};
  }

  const std::size_t slots_per_rep = [&]() -> std::size_t {
    switch (task) {
      case SimTask::ci_coverage:  // cover + len per (method, group, alpha)
        return methods.size() * groups.size() * alphas.size() * 2;
      case SimTask::sparse_test:  // reject per (method, group, alpha)
        return methods.size() * groups.size() * alphas.size();
      case SimTask::recovery:  // d, fp, fn
        return 3;
      case SimTask::stepdown_fwer:  // fwer + power per (method, alpha)
        return methods.size() * alphas.size() * 2;
    }
    return 0;
  }();

  parallel_for(0, static_cast<std::size_t>(reps), [&](std::size_t r) {
    RepOutcome& out = outcomes[r];
    out.values.assign(slots_per_rep, std::numeric_limits<double>::quiet_NaN());
    try {
      ScenarioCache local_cache;
      const ScenarioCache* cache = &base_cache;
      if (opts.redraw_design) {
        Scenario sc_r = sc;
        sc_r.seed = derive_seed(master_seed, rng_tag::design, r);
        local_cache = build_cache(sc_r, opts);
        cache = &local_cache;
      }
      const Eigen::VectorXd y = replicate_response(*cache, sc, master_seed, static_cast<int>(r));
      const std::uint64_t boot_seed = derive_seed(master_seed, rng_tag::bootstrap, r);

      if (task == SimTask::recovery) {
        const DesparsifiedFit fit = replicate_fit(*cache, y, opts);
        std::vector<int> all(p);
        std::iota(all.begin(), all.end(), 0);
        const RecoveryResult rec = support_recover(fit, all, opts.tau);
        const std::set<int> s0(cache->support.begin(), cache->support.end());
        int fp = 0;
        for (int j : rec.selected) fp += !s0.count(j);
        int fn = 0;
        for (int j : cache->support)
          fn += !std::binary_search(rec.selected.begin(), rec.selected.end(), j);
        out.values[0] = cache->support.empty() ? 1.0 : similarity(rec.selected, cache->support);
        out.values[1] = fp;
        out.values[2] = fn;
        return;
      }

      if (task == SimTask::ci_coverage) {
        const DesparsifiedFit fit = replicate_fit(*cache, y, opts);
        std::vector<int> all(p);
        std::iota(all.begin(), all.end(), 0);
        const Eigen::MatrixXd scores = bootstrap_scores(*fit.score_basis, all, B, boot_seed);
        const double sigma = std::sqrt(fit.sigma_eps_sq);

        std::size_t slot = 0;
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          const bool studentized = methods[mi] != "NST";
          for (const GroupSpec& g : groups) {
            // Statistic and per-replicate bootstrap maxima over this group.
            double stat = 0.0;
            for (int j : g.indices) {
              double v = root_n * std::fabs(fit.beta_breve[j] - cache->beta0[j]);
              if (studentized) v /= std::sqrt(fit.omega_diag[j]);
              stat = std::max(stat, v);
            }
            if (methods[mi] == "EX") {
              for (double alpha : alphas) {
                if (static_cast<int>(g.indices.size()) < 2) {
                  slot += 2;
                  continue;
                }
                const double t_sq = extreme_value_critical(alpha, g.indices.size());
                out.values[slot++] = stat * stat <= t_sq ? 1.0 : 0.0;
                double len = 0.0;
                for (int j : g.indices)
                  len += 2.0 * std::sqrt(t_sq * fit.omega_diag[j] / n);
                out.values[slot++] = len / g.indices.size();
              }
              continue;
            }
            std::vector<double> draws(B);
            for (int b = 0; b < B; ++b) {
              double mx = 0.0;
              for (int j : g.indices) {
                double v = std::fabs(scores(b, j)) * sigma;
                if (studentized) v /= std::sqrt(fit.omega_diag[j]);
                mx = std::max(mx, v);
              }
              draws[b] = mx;
            }
            std::sort(draws.begin(), draws.end());
            for (double alpha : alphas) {
              const double crit = draws[quantile_index(alpha, B)];
              out.values[slot++] = stat <= crit ? 1.0 : 0.0;
              if (studentized) {
                double len = 0.0;
                for (int j : g.indices)
                  len += 2.0 * crit * std::sqrt(fit.omega_diag[j] / n);
                out.values[slot++] = len / g.indices.size();
              } else {
                out.values[slot++] = 2.0 * crit / root_n;
              }
            }
          }
        }
        return;
      }

      if (task == SimTask::stepdown_fwer) {
        const DesparsifiedFit fit = replicate_fit(*cache, y, opts);
        std::vector<int> all(p);
        std::iota(all.begin(), all.end(), 0);
        const Eigen::VectorXd beta_null = Eigen::VectorXd::Zero(p);
        const std::set<int> s0(cache->support.begin(), cache->support.end());
        const double s0_size = std::max<double>(1.0, cache->support.size());

        std::size_t slot = 0;
        for (const std::string& method : methods) {
          for (double alpha : alphas) {
            std::vector<int> rejected;
            if (method == "BH") {
              rejected = bonferroni_holm(fit, beta_null, all, alpha);
            } else {
              const StepdownResult sd = stepdown_fwer(fit, beta_null, all, alpha, B, boot_seed,
                                                      Sided::two, method == "stepdown_ST");
              rejected = sd.rejected;
            }
            int false_rej = 0, true_rej = 0;
            for (int j : rejected) (s0.count(j) ? true_rej : false_rej)++;
            out.values[slot++] = false_rej > 0 ? 1.0 : 0.0;
            out.values[slot++] = true_rej / s0_size;
          }
        }
        return;
      }

      // sparse_test: one-step on the cached full fit, three-step per split.
      const DesparsifiedFit fit = replicate_fit(*cache, y, opts);
      const double sigma = std::sqrt(fit.sigma_eps_sq);
      std::vector<int> all(p);
      std::iota(all.begin(), all.end(), 0);
      const Eigen::MatrixXd scores = bootstrap_scores(*fit.score_basis, all, B, boot_seed);

      // Shared screening and reduced-model fit for the three-step variants.
      const auto [d1, d2] =
          split_sample(n, opts.c0, derive_seed(master_seed, rng_tag::split, r));
      Eigen::MatrixXd X1(d1.size(), p);
      Eigen::VectorXd Y1(d1.size());
      for (std::size_t i = 0; i < d1.size(); ++i) {
        X1.row(i) = cache->data.X.row(d1[i]);
        Y1[i] = y[d1[i]];
      }
      const int k = std::max<int>(static_cast<int>(d2.size()) - 1, 1);
      std::vector<int> screened;
      if (opts.screen == ScreenMode::marginal)
        screened = marginal_screen(X1, Y1, k);
      else
        screened = iterative_screen(X1, Y1, k, opts.k1 >= 0 ? opts.k1 : k / 2,
                                    opts.pipeline.lasso);

      Dataset d2_data;
      d2_data.X.resize(d2.size(), screened.size());
      d2_data.Y.resize(d2.size());
      for (std::size_t i = 0; i < d2.size(); ++i) {
        for (std::size_t c = 0; c < screened.size(); ++c)
          d2_data.X(i, c) = cache->data.X(d2[i], screened[c]);
        d2_data.Y[i] = y[d2[i]];
      }
      const Dataset d2s = standardize(d2_data);
      PipelineOptions popts = opts.pipeline;
      popts.lambda0 = 0.0;
      popts.nodewise_lambda = 0.0;
      popts.cv_seed = derive_seed(master_seed, rng_tag::cv_folds, r);
      const PipelineFit red_fit = fit_pipeline(d2s, popts);
      std::vector<int> all_red(screened.size());
      std::iota(all_red.begin(), all_red.end(), 0);
      const Eigen::MatrixXd red_scores = bootstrap_scores(
          *red_fit.desp.score_basis, all_red, B, derive_seed(boot_seed, rng_tag::bootstrap));
      const double red_sigma = std::sqrt(red_fit.desp.sigma_eps_sq);
      const double red_root_n = std::sqrt(static_cast<double>(d2.size()));

      std::size_t slot = 0;
      for (const std::string& method : methods) {
        const bool three_step = method.rfind("threestep", 0) == 0;
        const bool studentized = method.size() >= 2 && method.substr(method.size() - 2) == "ST";
        for (const GroupSpec& g : groups) {
          // Group statistic and bootstrap maxima under the chosen route.
          double stat = 0.0;
          std::vector<double> draws(B, 0.0);
          bool empty_reduced = false;
          if (!three_step) {
            for (int j : g.indices) {
              double v = root_n * std::fabs(fit.beta_breve[j]);
              if (studentized) v /= std::sqrt(fit.omega_diag[j]);
              stat = std::max(stat, v);
            }
            for (int b = 0; b < B; ++b) {
              double mx = 0.0;
              for (int j : g.indices) {
                double v = std::fabs(scores(b, j)) * sigma;
                if (studentized) v /= std::sqrt(fit.omega_diag[j]);
                mx = std::max(mx, v);
              }
              draws[b] = mx;
            }
          } else {
            std::vector<int> reduced_idx;
            for (std::size_t c = 0; c < screened.size(); ++c)
              if (std::binary_search(g.indices.begin(), g.indices.end(), screened[c]))
                reduced_idx.push_back(static_cast<int>(c));
            if (reduced_idx.empty()) {
              empty_reduced = true;  // statistic 0, never rejects
            } else {
              for (int c : reduced_idx) {
                double v = red_root_n * std::fabs(red_fit.desp.beta_breve[c]);
                if (studentized) v /= std::sqrt(red_fit.desp.omega_diag[c]);
                stat = std::max(stat, v);
              }
              for (int b = 0; b < B; ++b) {
                double mx = 0.0;
                for (int c : reduced_idx) {
                  double v = std::fabs(red_scores(b, c)) * red_sigma;
                  if (studentized) v /= std::sqrt(red_fit.desp.omega_diag[c]);
                  mx = std::max(mx, v);
                }
                draws[b] = mx;
              }
            }
          }
          std::sort(draws.begin(), draws.end());
          for (double alpha : alphas) {
            const bool reject =
                !empty_reduced && stat > draws[quantile_index(alpha, B)];
            out.values[slot++] = reject ? 1.0 : 0.0;
          }
        }
      }
    } catch (const Error&) {
      out.failed = true;
    }
  });

  // Ordered reduction.
  int failed = 0;
  for (const RepOutcome& o : outcomes) failed += o.failed;
  table.reps_failed = failed;
  if (failed > std::max(1.0, opts.max_failure_rate * reps))
    fail(ErrorCode::internal, std::to_string(failed) + " of " + std::to_string(reps) +
                                  " replications failed");

  auto mean_of_slot = [&](std::size_t slot) {
    double total = 0.0;
    int cnt = 0;
    for (const RepOutcome& o : outcomes) {
      if (o.failed || std::isnan(o.values[slot])) continue;
      total += o.values[slot];
      ++cnt;
    }
    return std::pair<double, int>(cnt > 0 ? total / cnt : std::numeric_limits<double>::quiet_NaN(),
                                  cnt);
  };
  auto sd_of_slot = [&](std::size_t slot, double mean) {
    double total = 0.0;
    int cnt = 0;
    for (const RepOutcome& o : outcomes) {
      if (o.failed || std::isnan(o.values[slot])) continue;
      total += (o.values[slot] - mean) * (o.values[slot] - mean);
      ++cnt;
    }
    return cnt > 1 ? std::sqrt(total / (cnt - 1)) : std::numeric_limits<double>::quiet_NaN();
  };

  auto push = [&](const std::string& method, const std::string& group, double alpha,
                  const std::string& metric, double value, double se, int cnt) {
    table.records.push_back({sc.name, table.task, method, group, alpha, metric, value, se, cnt});
  };

  if (task == SimTask::recovery) {
    const auto [d_mean, cnt] = mean_of_slot(0);
    push("SupRec", "all", 0.0, "d_mean", d_mean, std::numeric_limits<double>::quiet_NaN(), cnt);
    push("SupRec", "all", 0.0, "d_sd", sd_of_slot(0, d_mean),
         std::numeric_limits<double>::quiet_NaN(), cnt);
    const auto [fp, cnt_fp] = mean_of_slot(1);
    push("SupRec", "all", 0.0, "fp", fp, std::numeric_limits<double>::quiet_NaN(), cnt_fp);
    const auto [fn, cnt_fn] = mean_of_slot(2);
    push("SupRec", "all", 0.0, "fn", fn, std::numeric_limits<double>::quiet_NaN(), cnt_fn);
  } else if (task == SimTask::ci_coverage) {
    std::size_t slot = 0;
    for (const std::string& method : methods)
      for (const GroupSpec& g : groups)
        for (double alpha : alphas) {
          const auto [cov, cnt] = mean_of_slot(slot++);
          push(method, g.name, alpha, "coverage", cov, binomial_se(cov, cnt), cnt);
          const auto [len, cnt_len] = mean_of_slot(slot++);
          push(method, g.name, alpha, "len", len, std::numeric_limits<double>::quiet_NaN(),
               cnt_len);
        }
  } else if (task == SimTask::sparse_test) {
    std::size_t slot = 0;
    for (const std::string& method : methods)
      for (const GroupSpec& g : groups)
        for (double alpha : alphas) {
          const auto [rate, cnt] = mean_of_slot(slot++);
          push(method, g.name, alpha, "reject_rate", rate, binomial_se(rate, cnt), cnt);
        }
  } else if (task == SimTask::stepdown_fwer) {
    std::size_t slot = 0;
    for (const std::string& method : methods)
      for (double alpha : alphas) {
        const auto [fwer, cnt] = mean_of_slot(slot++);
        push(method, "all", alpha, "fwer", fwer, binomial_se(fwer, cnt), cnt);
        const auto [power, cnt_p] = mean_of_slot(slot++);
        push(method, "all", alpha, "avg_power", power,
             std::numeric_limits<double>::quiet_NaN(), cnt_p);
      }
  }

  table.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return table;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Scenario parse_scenario_config(const std::string& text) {
  Scenario sc;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::invalid_scenario, "expected 'key = value', got '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  sc.raw = kv;
  for (const auto& [key, value] : kv) {
    try {
      if (key == "name") sc.name = value;
      else if (key == "n") sc.n = std::stoi(value);
      else if (key == "p") sc.p = std::stoi(value);
      else if (key == "s0") sc.s0 = std::stoi(value);
      else if (key == "rho") sc.rho = std::stod(value);
      else if (key == "block") sc.block = std::stoi(value);
      else if (key == "seed") sc.seed = std::stoull(value);
      else if (key == "coef_a") sc.coef_a = std::stod(value);
      else if (key == "coef_b") sc.coef_b = std::stod(value);
      else if (key == "covariance") {
        if (value == "toeplitz") sc.covariance = CovarianceKind::toeplitz;
        else if (value == "exchangeable") sc.covariance = CovarianceKind::exchangeable;
        else if (value == "block_diagonal") sc.covariance = CovarianceKind::block_diagonal;
        else if (value == "identity") sc.covariance = CovarianceKind::identity;
        else fail(ErrorCode::invalid_scenario, "unknown covariance '" + value + "'");
      } else if (key == "errors") {
        if (value == "t4") sc.errors = ErrorDist::student_t4_scaled;
        else if (value == "gamma") sc.errors = ErrorDist::gamma41_standardized;
        else if (value == "gaussian") sc.errors = ErrorDist::gaussian;
        else fail(ErrorCode::invalid_scenario, "unknown error law '" + value + "'");
      } else if (key == "coef") {
        if (value == "unif_first") sc.pattern = CoefPattern::unif_first;
        else if (value == "unif_random") sc.pattern = CoefPattern::unif_random_support;
        else if (value == "fixed_first") sc.pattern = CoefPattern::fixed_magnitude_first;
        else fail(ErrorCode::invalid_scenario, "unknown coefficient pattern '" + value + "'");
      } else if (key == "coef_value") {
        if (value == "sqrt_10logp_n") sc.coef_rule = CoefValueRule::sqrt_10_logp_over_n;
        else if (value == "10sqrt_logp_n") sc.coef_rule = CoefValueRule::ten_sqrt_logp_over_n;
        else {
          sc.coef_rule = CoefValueRule::literal;
          sc.coef_a = std::stod(value);
        }
      } else {
        fail(ErrorCode::invalid_scenario, "unknown key '" + key + "'");
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_scenario, "bad value for '" + key + "': '" + value + "'");
    }
  }
  if (sc.n < 2 || sc.p < 1 || sc.s0 < 0 || sc.s0 > sc.p)
    fail(ErrorCode::invalid_scenario, "inconsistent scenario dimensions");
  return sc;
}

Scenario load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::input_not_found, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_config(buf.str());
}

}  // namespace hdinfer
