#include "hdinfer/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "hdinfer/errors.hpp"

namespace hdinfer {

namespace {

std::vector<double> parse_csv_line(const std::string& line, const std::string& path) {
  std::vector<double> row;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    const std::string tok = line.substr(start, end - start);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      row.push_back(v);
    } catch (const std::exception&) {
      fail(ErrorCode::io_error, "bad numeric field '" + tok + "' in " + path);
    }
    start = end + 1;
    if (end == line.size()) break;
  }
  return row;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::input_not_found, "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(parse_csv_line(line, path));
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      fail(ErrorCode::io_error, "ragged rows in " + path);
  }
  if (rows.empty()) fail(ErrorCode::io_error, "empty file " + path);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() != 1) fail(ErrorCode::io_error, "expected a single column in " + path);
  return m.col(0);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

std::string lasso_fit_to_json(const LassoFit& fit) {
  nlohmann::json j;
  j["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
  j["lambda"] = fit.lambda;
  j["active_set"] = fit.active_set;
  j["objective"] = fit.objective;
  return j.dump();
}

std::string desparsified_to_json(const DesparsifiedFit& fit) {
  nlohmann::json j;
  j["beta_breve"] =
      std::vector<double>(fit.beta_breve.data(), fit.beta_breve.data() + fit.beta_breve.size());
  j["omega_diag"] =
      std::vector<double>(fit.omega_diag.data(), fit.omega_diag.data() + fit.omega_diag.size());
  j["sigma_eps_sq"] = fit.sigma_eps_sq;
  return j.dump();
}

std::string summary_to_csv(const SummaryTable& table) {
  std::ostringstream out;
  out << "# hdinfer summary v1\n";
  out << "# scenario=" << table.scenario << " task=" << table.task << " reps=" << table.reps
      << " failed=" << table.reps_failed << " B=" << table.bootstrap_draws
      << " seed=" << table.seed << " version=0.1.0\n";
  out << "scenario,task,method,group,alpha,metric,value,se,reps_used\n";
  for (const SummaryRecord& r : table.records) {
    out << r.scenario << ',' << r.task << ',' << r.method << ',' << r.group << ','
        << format_double(r.alpha) << ',' << r.metric << ','
        << (std::isnan(r.value) ? "" : format_double(r.value)) << ','
        << (std::isnan(r.se) ? "" : format_double(r.se)) << ',' << r.reps_used << '\n';
  }
  return out.str();
}

std::string summary_to_json(const SummaryTable& table) {
  nlohmann::json j;
  j["scenario"] = table.scenario;
  j["task"] = table.task;
  j["reps"] = table.reps;
  j["reps_failed"] = table.reps_failed;
  j["bootstrap_draws"] = table.bootstrap_draws;
  j["seed"] = table.seed;
  j["version"] = "0.1.0";
  j["wall_time_seconds"] = table.wall_time_seconds;
  j["provenance"] = table.provenance;
  nlohmann::json records = nlohmann::json::array();
  for (const SummaryRecord& r : table.records) {
    nlohmann::json rec;
    rec["scenario"] = r.scenario;
    rec["task"] = r.task;
    rec["method"] = r.method;
    rec["group"] = r.group;
    rec["alpha"] = r.alpha;
    rec["metric"] = r.metric;
    if (!std::isnan(r.value)) rec["value"] = r.value;
    if (!std::isnan(r.se)) rec["se"] = r.se;
    rec["reps_used"] = r.reps_used;
    records.push_back(rec);
  }
  j["records"] = records;
  return j.dump(2);
}

namespace {

constexpr char kPrecMagic[8] = {'H', 'D', 'I', 'P', 'R', 'E', 'C', '1'};
constexpr char kBootMagic[8] = {'H', 'D', 'I', 'B', 'O', 'O', 'T', '1'};
constexpr char kDataMagic[8] = {'H', 'D', 'I', 'D', 'A', 'T', 'A', '1'};

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* b = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= b[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<bool>(in);
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out.write(kDataMagic, sizeof(kDataMagic));
  const std::int64_t n = data.n(), p = data.p();
  write_pod(out, n);
  write_pod(out, p);
  write_pod(out, static_cast<std::int32_t>(data.standardized ? 1 : 0));
  out.write(reinterpret_cast<const char*>(data.X.data()), sizeof(double) * data.X.size());
  out.write(reinterpret_cast<const char*>(data.Y.data()), sizeof(double) * data.Y.size());
  const Eigen::VectorXd means =
      data.column_means.size() == p ? data.column_means : Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd sds =
      data.column_sds.size() == p ? data.column_sds : Eigen::VectorXd::Ones(p);
  out.write(reinterpret_cast<const char*>(means.data()), sizeof(double) * p);
  out.write(reinterpret_cast<const char*>(sds.data()), sizeof(double) * p);
}

std::optional<Dataset> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDataMagic, sizeof(magic)) != 0) return std::nullopt;
  std::int64_t n = 0, p = 0;
  std::int32_t standardized = 0;
  if (!read_pod(in, n) || !read_pod(in, p) || !read_pod(in, standardized)) return std::nullopt;
  if (n < 1 || p < 1 || n > (1 << 30) || p > (1 << 24)) return std::nullopt;
  Dataset d;
  d.X.resize(n, p);
  d.Y.resize(n);
  d.column_means.resize(p);
  d.column_sds.resize(p);
  in.read(reinterpret_cast<char*>(d.X.data()), sizeof(double) * n * p);
  in.read(reinterpret_cast<char*>(d.Y.data()), sizeof(double) * n);
  in.read(reinterpret_cast<char*>(d.column_means.data()), sizeof(double) * p);
  in.read(reinterpret_cast<char*>(d.column_sds.data()), sizeof(double) * p);
  if (!in) return std::nullopt;
  d.standardized = standardized != 0;
  return d;
}

std::uint64_t precision_cache_key(const Eigen::MatrixXd& X, const Eigen::VectorXd& lambdas) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  const std::int64_t rows = X.rows(), cols = X.cols();
  h = fnv1a(&rows, sizeof(rows), h);
  h = fnv1a(&cols, sizeof(cols), h);
  h = fnv1a(X.data(), sizeof(double) * X.size(), h);
  h = fnv1a(lambdas.data(), sizeof(double) * lambdas.size(), h);
  return h;
}

void save_precision(const std::string& path, const PrecisionEstimate& est) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out.write(kPrecMagic, sizeof(kPrecMagic));
  const std::int64_t p = est.p();
  write_pod(out, p);
  out.write(reinterpret_cast<const char*>(est.theta.data()), sizeof(double) * est.theta.size());
  out.write(reinterpret_cast<const char*>(est.tau_sq.data()), sizeof(double) * est.tau_sq.size());
  out.write(reinterpret_cast<const char*>(est.lambdas.data()),
            sizeof(double) * est.lambdas.size());
  for (const auto& row : est.gamma_hats) {
    const std::int64_t count = static_cast<std::int64_t>(row.size());
    write_pod(out, count);
    for (const auto& [idx, val] : row) {
      const std::int32_t i32 = idx;
      write_pod(out, i32);
      write_pod(out, val);
    }
  }
}

std::optional<PrecisionEstimate> load_precision(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kPrecMagic, sizeof(magic)) != 0) return std::nullopt;
  std::int64_t p = 0;
  if (!read_pod(in, p) || p <= 0 || p > (1 << 24)) return std::nullopt;

  PrecisionEstimate est;
  est.theta.resize(p, p);
  est.tau_sq.resize(p);
  est.lambdas.resize(p);
  in.read(reinterpret_cast<char*>(est.theta.data()), sizeof(double) * p * p);
  in.read(reinterpret_cast<char*>(est.tau_sq.data()), sizeof(double) * p);
  in.read(reinterpret_cast<char*>(est.lambdas.data()), sizeof(double) * p);
  est.gamma_hats.resize(p);
  for (std::int64_t j = 0; j < p; ++j) {
    std::int64_t count = 0;
    if (!read_pod(in, count) || count < 0 || count > p) return std::nullopt;
    est.gamma_hats[j].resize(count);
    for (std::int64_t k = 0; k < count; ++k) {
      std::int32_t idx = 0;
      double val = 0.0;
      if (!read_pod(in, idx) || !read_pod(in, val)) return std::nullopt;
      est.gamma_hats[j][k] = {idx, val};
    }
  }
  if (!in) return std::nullopt;
  return est;
}

void save_bootstrap(const std::string& path, const BootstrapDistribution& dist) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out.write(kBootMagic, sizeof(kBootMagic));
  write_pod(out, static_cast<std::int32_t>(dist.variant));
  write_pod(out, static_cast<std::int64_t>(dist.num_draws));
  write_pod(out, dist.seed);
  write_pod(out, static_cast<std::int64_t>(dist.group.size()));
  for (int g : dist.group) write_pod(out, static_cast<std::int32_t>(g));
  out.write(reinterpret_cast<const char*>(dist.draws.data()),
            sizeof(double) * dist.draws.size());
}

std::optional<BootstrapDistribution> load_bootstrap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBootMagic, sizeof(magic)) != 0) return std::nullopt;
  std::int32_t variant = 0;
  std::int64_t num_draws = 0, group_size = 0;
  BootstrapDistribution dist;
  if (!read_pod(in, variant) || !read_pod(in, num_draws) || !read_pod(in, dist.seed))
    return std::nullopt;
  dist.variant = static_cast<BootstrapVariant>(variant);
  dist.num_draws = static_cast<int>(num_draws);
  if (!read_pod(in, group_size) || group_size < 0) return std::nullopt;
  dist.group.resize(group_size);
  for (std::int64_t i = 0; i < group_size; ++i) {
    std::int32_t g = 0;
    if (!read_pod(in, g)) return std::nullopt;
    dist.group[i] = g;
  }
  dist.draws.resize(num_draws);
  in.read(reinterpret_cast<char*>(dist.draws.data()), sizeof(double) * num_draws);
  if (!in) return std::nullopt;
  return dist;
}

}  // namespace hdinfer
