#include "hdinfer/dataset.hpp"

#include <cmath>
#include <string>

#include "hdinfer/errors.hpp"

namespace hdinfer {

void validate_dataset(const Dataset& data) {
  if (data.X.rows() < 2 || data.X.cols() < 1)
    fail(ErrorCode::dimension_mismatch,
         "need n >= 2 and p >= 1, got n=" + std::to_string(data.X.rows()) +
             " p=" + std::to_string(data.X.cols()));
  if (data.Y.size() != data.X.rows())
    fail(ErrorCode::dimension_mismatch,
         "Y has length " + std::to_string(data.Y.size()) + " but X has " +
             std::to_string(data.X.rows()) + " rows");
  if (!data.X.allFinite() || !data.Y.allFinite())
    fail(ErrorCode::non_finite, "dataset contains NaN or Inf");
}

Dataset standardize(const Dataset& data) {
  validate_dataset(data);
  const int n = data.n();
  const int p = data.p();

  Dataset out;
  out.X.resize(n, p);
  out.column_means.resize(p);
  out.column_sds.resize(p);

  for (int j = 0; j < p; ++j) {
    const double mean = data.X.col(j).mean();
    const double sd = std::sqrt((data.X.col(j).array() - mean).square().sum() / n);
    if (sd <= 1e-12)
      fail(ErrorCode::constant_column, "column " + std::to_string(j) + " has zero variance");
    out.column_means[j] = mean;
    out.column_sds[j] = sd;
    out.X.col(j) = (data.X.col(j).array() - mean) / sd;
  }
  out.Y = data.Y.array() - data.Y.mean();
  out.standardized = true;
  return out;
}

bool is_standardized(const Eigen::MatrixXd& X, double tol) {
  const double n = static_cast<double>(X.rows());
  for (int j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    if (std::fabs(mean) > tol) return false;
    const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / n);
    if (std::fabs(sd - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace hdinfer
