#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hdinfer/dataset.hpp"
#include "hdinfer/rng.hpp"

namespace test_helpers {

/// Seeded i.i.d. N(0,1) matrix.
inline Eigen::MatrixXd random_matrix(int n, int p, std::uint64_t seed) {
  hdinfer::RngStream rng(seed, 0);
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = rng.normal();
  return m;
}

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
  hdinfer::RngStream rng(seed, 1);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline hdinfer::Dataset random_dataset(int n, int p, std::uint64_t seed, bool standardized = true) {
  hdinfer::Dataset d;
  d.X = random_matrix(n, p, seed);
  d.Y = random_vector(n, seed + 1);
  return standardized ? hdinfer::standardize(d) : d;
}

/// Design with exactly orthonormal-in-sample columns: X'X/n = I, mean-zero.
inline Eigen::MatrixXd orthonormal_design(int n, int p, std::uint64_t seed) {
  Eigen::MatrixXd m = random_matrix(n, p + 1, seed);
  m.col(0).setOnes();  // orthogonalizing against 1 centers the rest
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p + 1);
  return q.rightCols(p) * std::sqrt(static_cast<double>(n));
}

/// Lasso objective ||y - X b||^2/n + 2 lambda ||b||_1.
inline double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& beta, double lambda) {
  return (y - X * beta).squaredNorm() / X.rows() + 2.0 * lambda * beta.lpNorm<1>();
}

}  // namespace test_helpers
