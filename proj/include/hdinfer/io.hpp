#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hdinfer/bootstrap.hpp"
#include "hdinfer/desparsify.hpp"
#include "hdinfer/nodewise.hpp"
#include "hdinfer/sim.hpp"
#include "hdinfer/solvers.hpp"

namespace hdinfer {

/// Headerless numeric CSV, comma separated, one matrix row per line.
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// Single-column variant.
Eigen::VectorXd read_vector_csv(const std::string& path);

/// Writes with 17 significant digits and LF line endings.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

std::string lasso_fit_to_json(const LassoFit& fit);
std::string desparsified_to_json(const DesparsifiedFit& fit);

std::string summary_to_csv(const SummaryTable& table);
std::string summary_to_json(const SummaryTable& table);

/// 17-significant-digit decimal form of a double.
std::string format_double(double v);

/// Binary dataset cache: one file holding X, Y and standardization metadata.
void save_dataset(const std::string& path, const Dataset& data);
std::optional<Dataset> load_dataset(const std::string& path);

// Binary persistence for the precision estimate, keyed by a hash of the
// design and the penalty vector. Callers control the directory (the CLI uses
// HDINFER_CACHE_DIR).
std::uint64_t precision_cache_key(const Eigen::MatrixXd& X, const Eigen::VectorXd& lambdas);
void save_precision(const std::string& path, const PrecisionEstimate& est);
std::optional<PrecisionEstimate> load_precision(const std::string& path);

void save_bootstrap(const std::string& path, const BootstrapDistribution& dist);
std::optional<BootstrapDistribution> load_bootstrap(const std::string& path);

}  // namespace hdinfer
