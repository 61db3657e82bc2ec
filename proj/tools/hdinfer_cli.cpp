// Command-line front end for the hdinfer shared library. Subcommands map to
// the C API: `fit` runs the full inference pipeline, `test` the simultaneous
// testing procedures, `simulate` the Monte Carlo harness.
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdinfer.h"

namespace {

struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

int status_exit_code(hdi_status s) {
  switch (s) {
    case HDI_OK:
      return 0;
    case HDI_ERR_INPUT_NOT_FOUND:
    case HDI_ERR_IO:
    case HDI_ERR_DIMENSION_MISMATCH:
    case HDI_ERR_INVALID_ARGUMENT:
    case HDI_ERR_INVALID_SCENARIO:
    case HDI_ERR_GROUP_OUT_OF_RANGE:
    case HDI_ERR_INVALID_ALPHA:
      return 2;
    default:
      return 1;
  }
}

const char* status_name(hdi_status s) {
  switch (s) {
    case HDI_OK: return "Ok";
    case HDI_ERR_NON_FINITE: return "NonFinite";
    case HDI_ERR_CONSTANT_COLUMN: return "ConstantColumn";
    case HDI_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case HDI_ERR_UNDERDETERMINED: return "Underdetermined";
    case HDI_ERR_DEGENERATE_VARIANCE: return "DegenerateVariance";
    case HDI_ERR_SATURATED_FIT: return "SaturatedFit";
    case HDI_ERR_DEGENERATE_TAU: return "DegenerateTau";
    case HDI_ERR_NO_FIXED_POINT: return "NoFixedPoint";
    case HDI_ERR_EMPTY_GROUP: return "EmptyGroup";
    case HDI_ERR_GROUP_MISMATCH: return "GroupMismatch";
    case HDI_ERR_GROUP_OUT_OF_RANGE: return "GroupOutOfRange";
    case HDI_ERR_INVALID_ALPHA: return "InvalidAlpha";
    case HDI_ERR_DEGENERATE_SPLIT: return "DegenerateSplit";
    case HDI_ERR_EMPTY_TRUTH: return "EmptyTruth";
    case HDI_ERR_NON_POSITIVE_WEIGHT: return "NonPositiveWeight";
    case HDI_ERR_NOT_POSITIVE_DEFINITE: return "NotPositiveDefinite";
    case HDI_ERR_INVALID_SCENARIO: return "InvalidScenario";
    case HDI_ERR_INPUT_NOT_FOUND: return "InputNotFound";
    case HDI_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case HDI_ERR_IO: return "IoError";
    case HDI_ERR_INTERNAL: return "Internal";
    default: return "Unknown";
  }
}

void check(hdi_status s) {
  if (s != HDI_OK) throw CliError{status_exit_code(s), status_name(s), hdi_last_error()};
}

struct CommonArgs {
  std::string x_path, y_path;
  std::string data_path;  // binary dataset cache, alternative to CSV inputs
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 0;
  int bootstrap_draws = 1000;
};

nlohmann::json config_json(const CommonArgs& c) {
  nlohmann::json j;
  j["x"] = c.x_path;
  j["y"] = c.y_path;
  j["data"] = c.data_path;
  j["out"] = c.out_dir;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["bootstrap_draws"] = c.bootstrap_draws;
  return j;
}

hdi_dataset* load_dataset_args(const CommonArgs& common) {
  hdi_dataset* ptr = nullptr;
  if (!common.data_path.empty()) {
    check(hdi_dataset_from_cache(common.data_path.c_str(), &ptr));
    return ptr;
  }
  if (common.x_path.empty() || common.y_path.empty())
    throw CliError{2, "InvalidArgument", "provide --x/--y or --data"};
  check(hdi_dataset_from_csv(common.x_path.c_str(), common.y_path.c_str(), 1, &ptr));
  return ptr;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{2, "IoError", "cannot write " + path.string()};
  out << text;
}

std::vector<double> read_beta_null(const std::string& path, std::int64_t p) {
  std::ifstream in(path);
  if (!in) throw CliError{2, "InputNotFound", "cannot open " + path};
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (static_cast<std::int64_t>(v.size()) != p)
    throw CliError{2, "DimensionMismatch",
                   "beta-null has " + std::to_string(v.size()) + " entries, expected " +
                       std::to_string(p)};
  return v;
}

struct DatasetHandle {
  hdi_dataset* ptr = nullptr;
  ~DatasetHandle() { hdi_dataset_free(ptr); }
};
struct FitHandle {
  hdi_fit* ptr = nullptr;
  ~FitHandle() { hdi_fit_free(ptr); }
};
struct TableHandle {
  hdi_table* ptr = nullptr;
  ~TableHandle() { hdi_table_free(ptr); }
};
struct StringHandle {
  char* ptr = nullptr;
  ~StringHandle() { hdi_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

hdi_fit_options make_fit_options(std::uint64_t seed, const char* cache_dir) {
  hdi_fit_options fo;
  hdi_fit_options_init(&fo);
  fo.cv_seed = seed;
  fo.cache_dir = cache_dir;
  return fo;
}

int run_fit(const CommonArgs& common, const std::string& save_data_path) {
  hdi_set_threads(common.threads);
  DatasetHandle data;
  data.ptr = load_dataset_args(common);
  if (!save_data_path.empty()) check(hdi_dataset_save_cache(data.ptr, save_data_path.c_str()));

  const char* cache_dir = std::getenv("HDINFER_CACHE_DIR");
  const hdi_fit_options fo = make_fit_options(common.seed, cache_dir);
  FitHandle fit;
  check(hdi_fit_run(data.ptr, &fo, &fit.ptr));

  StringHandle fit_json;
  check(hdi_fit_to_json(fit.ptr, &fit_json.ptr));

  nlohmann::json artifact;
  artifact["config"] = config_json(common);
  artifact["config"]["subcommand"] = "fit";
  artifact["result"] = nlohmann::json::parse(fit_json.str());
  write_file(std::filesystem::path(common.out_dir) / "fit.json", artifact.dump(2) + "\n");
  std::cout << "wrote " << (std::filesystem::path(common.out_dir) / "fit.json").string() << "\n";
  return 0;
}

int run_test(const CommonArgs& common, const std::string& method, const std::string& group,
             double alpha, const std::string& beta_null_path, bool studentized,
             const std::string& sided, const std::string& screen, double c0, double tau) {
  hdi_set_threads(common.threads);
  DatasetHandle data;
  data.ptr = load_dataset_args(common);
  std::int64_t n = 0, p = 0;
  check(hdi_dataset_dims(data.ptr, &n, &p));

  std::vector<double> beta_null;
  if (!beta_null_path.empty()) beta_null = read_beta_null(beta_null_path, p);

  FitHandle fit;
  if (method != "three-step") {
    const char* cache_dir = std::getenv("HDINFER_CACHE_DIR");
    const hdi_fit_options fo = make_fit_options(common.seed, cache_dir);
    check(hdi_fit_run(data.ptr, &fo, &fit.ptr));
  }

  hdi_test_options to;
  hdi_test_options_init(&to);
  to.method = method.c_str();
  to.group = group.c_str();
  to.alpha = alpha;
  to.beta_null = beta_null.empty() ? nullptr : beta_null.data();
  to.bootstrap_draws = common.bootstrap_draws;
  to.seed = common.seed;
  to.studentized = studentized ? 1 : 0;
  to.sided = sided.c_str();
  to.screen = screen.c_str();
  to.c0 = c0;
  to.tau = tau;

  StringHandle report;
  check(hdi_test_run(data.ptr, fit.ptr, &to, &report.ptr));

  nlohmann::json artifact;
  artifact["config"] = config_json(common);
  artifact["config"]["subcommand"] = "test";
  artifact["config"]["method"] = method;
  artifact["config"]["group"] = group;
  artifact["config"]["alpha"] = alpha;
  artifact["config"]["beta_null"] = beta_null_path;
  artifact["config"]["studentized"] = studentized;
  artifact["config"]["sided"] = sided;
  artifact["config"]["screen"] = screen;
  artifact["config"]["c0"] = c0;
  artifact["config"]["tau"] = tau;
  artifact["result"] = nlohmann::json::parse(report.str());
  write_file(std::filesystem::path(common.out_dir) / "test.json", artifact.dump(2) + "\n");
  std::cout << "wrote " << (std::filesystem::path(common.out_dir) / "test.json").string() << "\n";
  return 0;
}

int run_simulate(const CommonArgs& common, const std::string& scenario_path,
                 const std::string& task, int reps, bool plot_data) {
  hdi_set_threads(common.threads);
  std::ifstream in(scenario_path);
  if (!in) throw CliError{2, "InputNotFound", "cannot open " + scenario_path};
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string scenario_text = buf.str();

  TableHandle table;
  check(hdi_simulate_run(scenario_text.c_str(), task.c_str(), reps, common.bootstrap_draws,
                         common.seed, &table.ptr));

  StringHandle csv, json;
  check(hdi_table_csv(table.ptr, &csv.ptr));
  check(hdi_table_json(table.ptr, &json.ptr));

  const std::filesystem::path out_dir(common.out_dir);
  write_file(out_dir / "summary.csv", csv.str());

  nlohmann::json artifact = nlohmann::json::parse(json.str());
  artifact["config"] = config_json(common);
  artifact["config"]["subcommand"] = "simulate";
  artifact["config"]["scenario"] = scenario_path;
  artifact["config"]["scenario_text"] = scenario_text;
  artifact["config"]["task"] = task;
  artifact["config"]["reps"] = reps;
  write_file(out_dir / "summary.json", artifact.dump(2) + "\n");

  if (plot_data) {
    // One CSV per metric: method,group,alpha,value for external plotting.
    std::map<std::string, std::string> per_metric;
    for (const auto& rec : artifact["records"]) {
      const std::string metric = rec["metric"];
      auto& body = per_metric[metric];
      if (body.empty()) body = "method,group,alpha,value\n";
      body += rec["method"].get<std::string>() + "," + rec["group"].get<std::string>() + "," +
              std::to_string(rec["alpha"].get<double>()) + "," +
              (rec.contains("value") ? std::to_string(rec["value"].get<double>()) : "") + "\n";
    }
    for (const auto& [metric, body] : per_metric)
      write_file(out_dir / ("plot_" + metric + ".csv"), body);
  }
  std::cout << "wrote " << (out_dir / "summary.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous inference for high-dimensional linear models"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string method = "single", group = "all", beta_null_path, sided = "two",
              screen = "marginal", scenario_path, task = "ci_coverage", save_data_path;
  double alpha = 0.05, c0 = 0.2, tau = 2.0;
  bool studentized = false, plot_data = false;
  int reps = 100;

  auto add_common = [&](CLI::App* sub, bool needs_data) {
    if (needs_data) {
      sub->add_option("--x", common.x_path, "design matrix CSV");
      sub->add_option("--y", common.y_path, "response CSV");
      sub->add_option("--data", common.data_path, "binary dataset cache (alternative to --x/--y)");
    }
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "random seed");
    sub->add_option("--threads", common.threads, "worker thread cap (0 = all cores)");
    sub->add_option("--bootstrap-draws", common.bootstrap_draws, "bootstrap replicates");
  };

  CLI::App* fit = app.add_subcommand("fit", "run the de-biased inference pipeline");
  add_common(fit, true);
  fit->add_option("--save-data", save_data_path, "also write the binary dataset cache here");

  CLI::App* test = app.add_subcommand("test", "simultaneous tests and recovery");
  add_common(test, true);
  test->add_option("--method", method, "single|three-step|stepdown|recover|ex");
  test->add_option("--group", group, "all | complement:i,j | i,j (1-based)");
  test->add_option("--alpha", alpha, "significance level");
  test->add_option("--beta-null", beta_null_path, "null coefficient file (one value per line)");
  test->add_flag("--studentized", studentized, "studentized statistic");
  test->add_option("--sided", sided, "one|two");
  test->add_option("--screen", screen, "marginal|iterative");
  test->add_option("--c0", c0, "screening split fraction");
  test->add_option("--tau", tau, "recovery threshold");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo scenario runner");
  add_common(sim, false);
  sim->add_option("--scenario", scenario_path, "scenario config file")->required();
  sim->add_option("--task", task, "ci_coverage|sparse_test|recovery|stepdown_fwer");
  sim->add_option("--reps", reps, "Monte Carlo replications");
  sim->add_flag("--plot-data", plot_data, "write per-metric plot CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return run_fit(common, save_data_path);
    if (test->parsed())
      return run_test(common, method, group, alpha, beta_null_path, studentized, sided, screen,
                      c0, tau);
    if (sim->parsed()) return run_simulate(common, scenario_path, task, reps, plot_data);
  } catch (const CliError& e) {
    nlohmann::json err;
    err["error"] = e.code;
    err["message"] = e.message;
    std::cerr << err.dump() << "\n";
    return e.exit_code;
  }
  return 0;
}
