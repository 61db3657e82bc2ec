#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hdinfer/dataset.hpp"
#include "hdinfer/errors.hpp"
#include "hdinfer/io.hpp"
#include "hdinfer/nodewise.hpp"
#include "hdinfer/sim.hpp"
#include "helpers.hpp"

using namespace hdinfer;

TEST_CASE("standardize: single column and untouched response") {
  Dataset d;
  d.X.resize(3, 1);
  d.X << 1, 2, 3;
  d.Y = Eigen::VectorXd::Zero(3);
  const Dataset s = standardize(d);
  CHECK(s.X.col(0).mean() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(std::sqrt(s.X.col(0).squaredNorm() / 3.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.Y.isZero());
  CHECK(s.column_means[0] == doctest::Approx(2.0));
  CHECK(s.standardized);
}

TEST_CASE("standardize is idempotent") {
  const Dataset s = test_helpers::random_dataset(40, 6, 11);
  const Dataset s2 = standardize(s);
  CHECK((s2.X - s.X).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((s2.Y - s.Y).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("standardize: correlated design gets exact column moments") {
  Scenario sc;
  sc.n = 100;
  sc.p = 12;
  sc.covariance = CovarianceKind::toeplitz;
  sc.rho = 0.9;
  Dataset d;
  d.X = sample_design(make_covariance(sc), sc.n, 3);
  d.Y = test_helpers::random_vector(sc.n, 4);
  const Dataset s = standardize(d);
  for (int j = 0; j < sc.p; ++j) {
    CHECK(std::fabs(s.X.col(j).mean()) < 1e-10);
    const double sd = std::sqrt(s.X.col(j).squaredNorm() / sc.n);
    CHECK(std::fabs(sd - 1.0) < 1e-10);
  }
}

TEST_CASE("standardize rejects constant columns and non-finite input") {
  Dataset d;
  d.X = Eigen::MatrixXd::Ones(5, 2);
  d.X.col(0) = Eigen::VectorXd::LinSpaced(5, 0, 1);
  d.Y = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_WITH_AS(standardize(d), doctest::Contains("column 1"), Error);

  d.X(0, 1) = std::nan("");
  CHECK_THROWS_AS(standardize(d), Error);
}

TEST_CASE("csv round trip keeps full precision") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hdinfer_io_test";
  fs::create_directories(dir);
  const Eigen::MatrixXd m = test_helpers::random_matrix(7, 3, 21) * 1e-7;
  const std::string path = (dir / "m.csv").string();
  write_matrix_csv(path, m);
  const Eigen::MatrixXd back = read_matrix_csv(path);
  CHECK((back - m).lpNorm<Eigen::Infinity>() == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("csv reader flags missing and ragged input") {
  CHECK_THROWS_AS(read_matrix_csv("/nonexistent/file.csv"), Error);
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hdinfer_io_test2";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "bad.csv");
    out << "1,2\n1,2,3\n";
  }
  CHECK_THROWS_AS(read_matrix_csv((dir / "bad.csv").string()), Error);
  fs::remove_all(dir);
}

TEST_CASE("dataset binary cache round trips") {
  namespace fs = std::filesystem;
  const Dataset d = test_helpers::random_dataset(25, 4, 99);
  const fs::path dir = fs::temp_directory_path() / "hdinfer_data_cache";
  fs::create_directories(dir);
  const std::string path = (dir / "d.bin").string();
  save_dataset(path, d);
  const auto back = load_dataset(path);
  REQUIRE(back.has_value());
  CHECK(back->standardized == d.standardized);
  CHECK((back->X - d.X).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back->Y - d.Y).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back->column_sds - d.column_sds).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_FALSE(load_dataset((dir / "missing.bin").string()).has_value());
  fs::remove_all(dir);
}

TEST_CASE("precision estimate binary cache round trips") {
  namespace fs = std::filesystem;
  const Dataset d = test_helpers::random_dataset(30, 6, 31);
  const PrecisionEstimate est = precision_estimate(d, 0.2);
  const fs::path dir = fs::temp_directory_path() / "hdinfer_cache_test";
  fs::create_directories(dir);
  const std::string path = (dir / "prec.bin").string();
  save_precision(path, est);
  const auto back = load_precision(path);
  REQUIRE(back.has_value());
  CHECK((back->theta - est.theta).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back->tau_sq - est.tau_sq).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(back->gamma_hats == est.gamma_hats);

  // Key changes with the data and with the penalties.
  const Eigen::VectorXd l1 = Eigen::VectorXd::Constant(6, 0.2);
  const Eigen::VectorXd l2 = Eigen::VectorXd::Constant(6, 0.3);
  CHECK(precision_cache_key(d.X, l1) != precision_cache_key(d.X, l2));
  fs::remove_all(dir);
}
