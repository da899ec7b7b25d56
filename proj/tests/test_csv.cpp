#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsglasso/csv.hpp"

using namespace dsglasso;
using Eigen::MatrixXd;

TEST_CASE("csv round trip is exact") {
  MatrixXd m(2, 3);
  m << 0.1, -2.5e-300, 1.0 / 3.0, 7.0, 1e22, -0.0;
  std::stringstream ss;
  csv::write_matrix(ss, m);
  const MatrixXd back = csv::read_matrix(ss);
  CHECK(back == m);
}

TEST_CASE("csv parsing tolerates whitespace and CRLF") {
  std::stringstream ss(" 1, 2.5 ,+3\r\n4,5,6e-1\n\n");
  const MatrixXd m = csv::read_matrix(ss);
  REQUIRE(m.rows() == 2);
  CHECK(m(0, 2) == 3.0);
  CHECK(m(1, 2) == 0.6);
}

TEST_CASE("csv rejects malformed input") {
  for (const char* bad : {"1,2\n3\n", "", "1,x\n", "1,,2\n", "nan,1\n", "inf\n", "1;2\n", "1,2,\n"}) {
    std::stringstream ss(bad);
    CHECK_THROWS_AS(csv::read_matrix(ss), InputError);
  }
  CHECK_THROWS_AS(csv::read_matrix_file("/nonexistent/file.csv"), InputError);
}

TEST_CASE("format_double is locale independent and shortest") {
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(csv::format_double(1.0) == "1");
  CHECK(csv::format_double(-2.5) == "-2.5");
}

TEST_CASE("symmetric file reader") {
  const auto dir = std::filesystem::temp_directory_path() / "dsglasso_csv_test";
  std::filesystem::create_directories(dir);
  const auto good = (dir / "good.csv").string();
  const auto bad = (dir / "bad.csv").string();
  std::ofstream(good) << "2,1\n1,2\n";
  std::ofstream(bad) << "2,1\n1.1,2\n";
  CHECK(csv::read_symmetric_file(good)(0, 1) == 1.0);
  CHECK_THROWS_AS(csv::read_symmetric_file(bad), InputError);
  std::filesystem::remove_all(dir);
}
