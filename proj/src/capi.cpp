#include "hdinfer.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hdinfer/errors.hpp"
#include "hdinfer/io.hpp"
#include "hdinfer/parallel.hpp"
#include "hdinfer/pipeline.hpp"
#include "hdinfer/procedures.hpp"
#include "hdinfer/sim.hpp"

namespace {

thread_local std::string t_last_error;

hdi_status map_code(hdinfer::ErrorCode code) {
  using hdinfer::ErrorCode;
  switch (code) {
    case ErrorCode::ok: return HDI_OK;
    case ErrorCode::non_finite: return HDI_ERR_NON_FINITE;
    case ErrorCode::constant_column: return HDI_ERR_CONSTANT_COLUMN;
    case ErrorCode::dimension_mismatch: return HDI_ERR_DIMENSION_MISMATCH;
    case ErrorCode::underdetermined: return HDI_ERR_UNDERDETERMINED;
    case ErrorCode::degenerate_variance: return HDI_ERR_DEGENERATE_VARIANCE;
    case ErrorCode::saturated_fit: return HDI_ERR_SATURATED_FIT;
    case ErrorCode::degenerate_tau: return HDI_ERR_DEGENERATE_TAU;
    case ErrorCode::no_fixed_point: return HDI_ERR_NO_FIXED_POINT;
    case ErrorCode::empty_group: return HDI_ERR_EMPTY_GROUP;
    case ErrorCode::group_mismatch: return HDI_ERR_GROUP_MISMATCH;
    case ErrorCode::group_out_of_range: return HDI_ERR_GROUP_OUT_OF_RANGE;
    case ErrorCode::invalid_alpha: return HDI_ERR_INVALID_ALPHA;
    case ErrorCode::degenerate_split: return HDI_ERR_DEGENERATE_SPLIT;
    case ErrorCode::empty_truth: return HDI_ERR_EMPTY_TRUTH;
    case ErrorCode::non_positive_weight: return HDI_ERR_NON_POSITIVE_WEIGHT;
    case ErrorCode::not_positive_definite: return HDI_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorCode::invalid_scenario: return HDI_ERR_INVALID_SCENARIO;
    case ErrorCode::input_not_found: return HDI_ERR_INPUT_NOT_FOUND;
    case ErrorCode::invalid_argument: return HDI_ERR_INVALID_ARGUMENT;
    case ErrorCode::io_error: return HDI_ERR_IO;
    case ErrorCode::internal: return HDI_ERR_INTERNAL;
  }
  return HDI_ERR_UNKNOWN;
}

template <typename Fn>
hdi_status guarded(Fn&& fn) {
  try {
    fn();
    return HDI_OK;
  } catch (const hdinfer::Error& e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return HDI_ERR_UNKNOWN;
  } catch (...) {
    t_last_error = "unknown error";
    return HDI_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// "all", "complement:1,2,3" or "1,2,3" with 1-based user indices.
std::vector<int> parse_group(const std::string& spec, int p) {
  using hdinfer::ErrorCode;
  std::vector<int> group;
  auto parse_list = [p](const std::string& s) {
    std::vector<int> idx;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      int v = 0;
      try {
        v = std::stoi(tok);
      } catch (const std::exception&) {
        hdinfer::fail(ErrorCode::invalid_argument, "bad group index '" + tok + "'");
      }
      if (v < 1 || v > p)
        hdinfer::fail(ErrorCode::group_out_of_range,
                      "index " + tok + " outside 1.." + std::to_string(p));
      idx.push_back(v - 1);
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
  };

  if (spec == "all") {
    group.resize(p);
    for (int j = 0; j < p; ++j) group[j] = j;
  } else if (spec.rfind("complement:", 0) == 0) {
    const std::vector<int> excl = parse_list(spec.substr(11));
    std::vector<bool> drop(p, false);
    for (int j : excl) drop[j] = true;
    for (int j = 0; j < p; ++j)
      if (!drop[j]) group.push_back(j);
  } else {
    group = parse_list(spec);
  }
  if (group.empty()) hdinfer::fail(ErrorCode::empty_group, "group resolves to the empty set");
  return group;
}

nlohmann::json to_one_based(const std::vector<int>& idx) {
  nlohmann::json arr = nlohmann::json::array();
  for (int j : idx) arr.push_back(j + 1);
  return arr;
}

}  // namespace

struct hdi_dataset {
  hdinfer::Dataset data;
};

struct hdi_fit {
  hdinfer::PipelineFit fit;
};

struct hdi_table {
  hdinfer::SummaryTable table;
};

extern "C" {

const char* hdi_version(void) { return "0.1.0"; }

const char* hdi_last_error(void) { return t_last_error.c_str(); }

void hdi_set_threads(int threads) { hdinfer::set_max_threads(threads); }

hdi_status hdi_dataset_from_csv(const char* x_path, const char* y_path, int standardize,
                                hdi_dataset** out) {
  return guarded([&] {
    if (!x_path || !y_path || !out)
      hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    hdinfer::Dataset d;
    d.X = hdinfer::read_matrix_csv(x_path);
    d.Y = hdinfer::read_vector_csv(y_path);
    hdinfer::validate_dataset(d);
    if (standardize) d = hdinfer::standardize(d);
    *out = new hdi_dataset{std::move(d)};
  });
}

hdi_status hdi_dataset_from_arrays(const double* x_row_major, int64_t n, int64_t p,
                                   const double* y, int standardize, hdi_dataset** out) {
  return guarded([&] {
    if (!x_row_major || !y || !out || n < 1 || p < 1)
      hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "bad array arguments");
    hdinfer::Dataset d;
    d.X.resize(n, p);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < p; ++j) d.X(i, j) = x_row_major[i * p + j];
    d.Y = Eigen::Map<const Eigen::VectorXd>(y, n);
    hdinfer::validate_dataset(d);
    if (standardize) d = hdinfer::standardize(d);
    *out = new hdi_dataset{std::move(d)};
  });
}

hdi_status hdi_dataset_from_cache(const char* path, hdi_dataset** out) {
  return guarded([&] {
    if (!path || !out) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    auto loaded = hdinfer::load_dataset(path);
    if (!loaded)
      hdinfer::fail(hdinfer::ErrorCode::input_not_found,
                    "no readable dataset cache at '" + std::string(path) + "'");
    *out = new hdi_dataset{std::move(*loaded)};
  });
}

hdi_status hdi_dataset_save_cache(const hdi_dataset* d, const char* path) {
  return guarded([&] {
    if (!d || !path) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    hdinfer::save_dataset(path, d->data);
  });
}

hdi_status hdi_dataset_dims(const hdi_dataset* d, int64_t* n, int64_t* p) {
  return guarded([&] {
    if (!d || !n || !p) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    *n = d->data.n();
    *p = d->data.p();
  });
}

void hdi_dataset_free(hdi_dataset* d) { delete d; }

void hdi_fit_options_init(hdi_fit_options* opts) {
  if (!opts) return;
  opts->lambda0 = 0.0;
  opts->nodewise_lambda = 0.0;
  opts->cv_folds = 10;
  opts->cv_seed = 1;
  opts->use_modified_sigma = 1;
  opts->cache_dir = nullptr;
}

hdi_status hdi_fit_run(const hdi_dataset* d, const hdi_fit_options* opts, hdi_fit** out) {
  return guarded([&] {
    if (!d || !out) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    hdi_fit_options defaults;
    hdi_fit_options_init(&defaults);
    const hdi_fit_options& o = opts ? *opts : defaults;

    hdinfer::PipelineOptions popts;
    popts.lambda0 = o.lambda0;
    popts.nodewise_lambda = o.nodewise_lambda;
    popts.cv.folds = o.cv_folds;
    popts.cv_seed = o.cv_seed;
    popts.use_modified_sigma = o.use_modified_sigma != 0;

    if (!o.cache_dir) {
      *out = new hdi_fit{hdinfer::fit_pipeline(d->data, popts)};
      return;
    }

    // Cached path: resolve the shared penalty, then key the precision
    // estimate on (design hash, penalty vector).
    double lam = popts.nodewise_lambda;
    if (lam <= 0.0)
      lam = hdinfer::shared_cv_lambda_nodewise(d->data.X, popts.cv_seed, popts.cv, popts.lasso)
                .first;
    const Eigen::VectorXd lambdas = Eigen::VectorXd::Constant(d->data.p(), lam);
    const std::uint64_t key = hdinfer::precision_cache_key(d->data.X, lambdas);
    std::ostringstream name;
    name << "prec_" << std::hex << key << ".bin";
    const std::filesystem::path path = std::filesystem::path(o.cache_dir) / name.str();

    std::shared_ptr<const hdinfer::PrecisionEstimate> precision;
    if (auto loaded = hdinfer::load_precision(path.string());
        loaded && loaded->p() == d->data.p()) {
      precision = std::make_shared<const hdinfer::PrecisionEstimate>(std::move(*loaded));
    } else {
      auto est = hdinfer::precision_estimate(d->data, lambdas, popts.lasso);
      std::filesystem::create_directories(path.parent_path());
      hdinfer::save_precision(path.string(), est);
      precision = std::make_shared<const hdinfer::PrecisionEstimate>(std::move(est));
    }
    *out = new hdi_fit{hdinfer::fit_pipeline_cached(d->data, popts, precision, nullptr, lam)};
  });
}

hdi_status hdi_fit_dims(const hdi_fit* f, int64_t* n, int64_t* p) {
  return guarded([&] {
    if (!f || !n || !p) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    *n = f->fit.desp.n;
    *p = f->fit.desp.p();
  });
}

namespace {

hdi_status copy_vector(const Eigen::VectorXd& v, double* buf, int64_t len) {
  return guarded([&] {
    if (!buf || len < v.size())
      hdinfer::fail(hdinfer::ErrorCode::dimension_mismatch, "buffer too small");
    Eigen::Map<Eigen::VectorXd>(buf, v.size()) = v;
  });
}

}  // namespace

hdi_status hdi_fit_beta_hat(const hdi_fit* f, double* buf, int64_t len) {
  if (!f) return HDI_ERR_INVALID_ARGUMENT;
  return copy_vector(f->fit.desp.beta_hat, buf, len);
}

hdi_status hdi_fit_beta_breve(const hdi_fit* f, double* buf, int64_t len) {
  if (!f) return HDI_ERR_INVALID_ARGUMENT;
  return copy_vector(f->fit.desp.beta_breve, buf, len);
}

hdi_status hdi_fit_omega_diag(const hdi_fit* f, double* buf, int64_t len) {
  if (!f) return HDI_ERR_INVALID_ARGUMENT;
  return copy_vector(f->fit.desp.omega_diag, buf, len);
}

hdi_status hdi_fit_sigma(const hdi_fit* f, double* sigma_hat, double* sigma_hat_modified) {
  return guarded([&] {
    if (!f) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null fit");
    if (sigma_hat) *sigma_hat = f->fit.scaled.sigma_hat;
    if (sigma_hat_modified) *sigma_hat_modified = f->fit.scaled.sigma_hat_modified;
  });
}

hdi_status hdi_fit_to_json(const hdi_fit* f, char** out) {
  return guarded([&] {
    if (!f || !out) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    nlohmann::json j;
    j["scaled_lasso"] = nlohmann::json::parse(hdinfer::lasso_fit_to_json(f->fit.scaled.fit));
    j["desparsified"] = nlohmann::json::parse(hdinfer::desparsified_to_json(f->fit.desp));
    j["sigma_hat"] = f->fit.scaled.sigma_hat;
    j["sigma_hat_modified"] = f->fit.scaled.sigma_hat_modified;
    j["lambda0"] = f->fit.lambda0;
    j["nodewise_lambda"] = f->fit.nodewise_lambda;
    j["df"] = f->fit.scaled.df;
    *out = dup_string(j.dump(2));
  });
}

void hdi_fit_free(hdi_fit* f) { delete f; }

void hdi_test_options_init(hdi_test_options* opts) {
  if (!opts) return;
  opts->method = "single";
  opts->group = "all";
  opts->alpha = 0.05;
  opts->beta_null = nullptr;
  opts->bootstrap_draws = 1000;
  opts->seed = 1;
  opts->studentized = 0;
  opts->sided = "two";
  opts->screen = "marginal";
  opts->c0 = 0.2;
  opts->tau = 2.0;
}

hdi_status hdi_test_run(const hdi_dataset* d, const hdi_fit* f, const hdi_test_options* opts,
                        char** report_json) {
  return guarded([&] {
    using namespace hdinfer;
    if (!opts || !report_json) fail(ErrorCode::invalid_argument, "null argument");
    const std::string method = opts->method ? opts->method : "single";
    nlohmann::json rep;
    rep["method"] = method;
    rep["alpha"] = opts->alpha;

    if (method == "three-step") {
      if (!d) fail(ErrorCode::invalid_argument, "three-step needs the dataset handle");
      const std::vector<int> group = parse_group(opts->group ? opts->group : "all", d->data.p());
      ThreeStepOptions tso;
      tso.c0 = opts->c0;
      tso.mode = std::string(opts->screen ? opts->screen : "marginal") == "iterative"
                     ? ScreenMode::iterative
                     : ScreenMode::marginal;
      tso.studentized = opts->studentized != 0;
      const ThreeStepResult res =
          three_step_test(d->data, group, opts->alpha, opts->bootstrap_draws, opts->seed, tso);
      rep["group"] = to_one_based(group);
      rep["screened"] = to_one_based(res.screened);
      rep["reduced_group"] = to_one_based(res.reduced_group);
      rep["statistic"] = res.statistic;
      rep["critical"] = res.critical;
      rep["p_value"] = res.p_value;
      rep["reject"] = res.reject;
      rep["c0"] = opts->c0;
      rep["screen"] = opts->screen ? opts->screen : "marginal";
      *report_json = dup_string(rep.dump(2));
      return;
    }

    if (!f) fail(ErrorCode::invalid_argument, "this method needs a fit handle");
    const DesparsifiedFit& fit = f->fit.desp;
    const int p = fit.p();
    const std::vector<int> group = parse_group(opts->group ? opts->group : "all", p);
    Eigen::VectorXd beta_null = Eigen::VectorXd::Zero(p);
    if (opts->beta_null) beta_null = Eigen::Map<const Eigen::VectorXd>(opts->beta_null, p);
    rep["group"] = to_one_based(group);

    if (method == "recover") {
      const RecoveryResult res = support_recover(fit, group, opts->tau);
      rep["tau"] = opts->tau;
      rep["selected"] = to_one_based(res.selected);
      rep["thresholds"] = res.thresholds;
      *report_json = dup_string(rep.dump(2));
      return;
    }

    if (method == "ex") {
      const double t_sq = extreme_value_critical(opts->alpha, static_cast<int>(group.size()));
      double stat = 0.0;
      for (int j : group) {
        const double z = fit.beta_breve[j] - beta_null[j];
        stat = std::max(stat, fit.n * z * z / fit.omega_diag[j]);
      }
      rep["statistic"] = stat;
      rep["critical"] = t_sq;
      rep["reject"] = stat > t_sq;
      *report_json = dup_string(rep.dump(2));
      return;
    }

    if (method == "stepdown") {
      const Sided sided = std::string(opts->sided ? opts->sided : "two") == "one" ? Sided::one
                                                                                  : Sided::two;
      const StepdownResult res =
          stepdown_fwer(fit, beta_null, group, opts->alpha, opts->bootstrap_draws, opts->seed,
                        sided, opts->studentized != 0);
      rep["rejected"] = to_one_based(res.rejected);
      nlohmann::json steps = nlohmann::json::array();
      for (const StepdownStep& s : res.steps)
        steps.push_back({{"active_size", s.active.size()}, {"critical", s.critical}});
      rep["steps"] = steps;
      rep["sided"] = opts->sided ? opts->sided : "two";
      rep["studentized"] = opts->studentized != 0;
      *report_json = dup_string(rep.dump(2));
      return;
    }

    if (method != "single") fail(ErrorCode::invalid_argument, "unknown method '" + method + "'");

    const bool one_sided = std::string(opts->sided ? opts->sided : "two") == "one";
    BootstrapVariant variant;
    if (opts->studentized)
      variant = one_sided ? BootstrapVariant::st_one_sided : BootstrapVariant::st_two_sided;
    else
      variant = one_sided ? BootstrapVariant::nst_one_sided : BootstrapVariant::nst_two_sided;
    const BootstrapDistribution dist =
        multiplier_bootstrap(*fit.score_basis, std::sqrt(fit.sigma_eps_sq), fit.omega_diag,
                             group, variant, opts->bootstrap_draws, opts->seed);
    const TestResult res = simultaneous_test(fit, beta_null, group, dist, opts->alpha);
    rep["statistic"] = res.statistic;
    rep["critical"] = res.critical;
    rep["p_value"] = res.p_value;
    rep["reject"] = res.reject;
    rep["studentized"] = opts->studentized != 0;
    rep["sided"] = one_sided ? "one" : "two";
    if (!one_sided) {
      const std::vector<Interval> ci =
          simultaneous_ci(fit, group, res.critical, opts->studentized != 0);
      nlohmann::json intervals = nlohmann::json::array();
      for (std::size_t c = 0; c < group.size(); ++c)
        intervals.push_back({{"index", group[c] + 1}, {"lo", ci[c].lo}, {"hi", ci[c].hi}});
      rep["intervals"] = intervals;
    }
    *report_json = dup_string(rep.dump(2));
  });
}

hdi_status hdi_simulate_run(const char* scenario_text, const char* task, int reps,
                            int bootstrap_draws, uint64_t seed, hdi_table** out) {
  return guarded([&] {
    using namespace hdinfer;
    if (!scenario_text || !task || !out) fail(ErrorCode::invalid_argument, "null argument");
    const Scenario sc = parse_scenario_config(scenario_text);
    const SimTask t = parse_sim_task(task);
    SimOptions opts;
    *out = new hdi_table{run_scenario(sc, t, reps, bootstrap_draws, seed, opts)};
  });
}

hdi_status hdi_table_csv(const hdi_table* t, char** out) {
  return guarded([&] {
    if (!t || !out) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    *out = dup_string(hdinfer::summary_to_csv(t->table));
  });
}

hdi_status hdi_table_json(const hdi_table* t, char** out) {
  return guarded([&] {
    if (!t || !out) hdinfer::fail(hdinfer::ErrorCode::invalid_argument, "null argument");
    *out = dup_string(hdinfer::summary_to_json(t->table));
  });
}

void hdi_table_free(hdi_table* t) { delete t; }

void hdi_string_free(char* s) { std::free(s); }

}  // extern "C"
