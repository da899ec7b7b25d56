#include <doctest.h>

#include <random>

#include "dsglasso/core.hpp"
#include "dsglasso/models.hpp"
#include "oracles.hpp"

using namespace dsglasso;
using Eigen::MatrixXd;

TEST_CASE("SymMatrix stores one value per unordered pair") {
  SymMatrix m(4);
  m.set(1, 3, 2.5);
  CHECK(m(3, 1) == 2.5);
  m.set(3, 1, -1.0);
  CHECK(m(1, 3) == -1.0);
  const MatrixXd d = m.dense();
  CHECK(d == d.transpose());
}

TEST_CASE("SymMatrix validation") {
  CHECK_THROWS_AS(SymMatrix(0), InputError);
  SymMatrix m(2);
  CHECK_THROWS_AS(m.set(0, 1, std::nan("")), InputError);
  CHECK_THROWS_AS(m.set(0, 0, INFINITY), InputError);
  MatrixXd asym(2, 2);
  asym << 1, 2, 3, 1;
  CHECK_THROWS_AS(SymMatrix::from_dense(asym), InputError);
  CHECK_THROWS_AS(SymMatrix::from_dense(MatrixXd(2, 3)), InputError);
  MatrixXd near(2, 2);
  near << 1, 2, 2 + 1e-12, 1;
  CHECK(SymMatrix::from_dense(near)(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("DataMatrix validation") {
  CHECK_THROWS_AS(DataMatrix(MatrixXd(0, 3)), InputError);
  MatrixXd x = MatrixXd::Zero(2, 2);
  x(1, 1) = std::nan("");
  CHECK_THROWS_AS(DataMatrix{x}, InputError);
}

TEST_CASE("sample_covariance examples") {
  MatrixXd one = MatrixXd::Zero(1, 4);
  one(0, 0) = 1.0;
  const SymMatrix s1 = sample_covariance(DataMatrix(one));
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) CHECK(s1(i, j) == (i == 0 && j == 0 ? 1.0 : 0.0));

  const SymMatrix s0 = sample_covariance(DataMatrix(MatrixXd::Zero(7, 3)));
  CHECK(sup_norm(s0) == 0.0);

  std::mt19937_64 gen(11);
  const MatrixXd x = oracle::random_matrix(gen, 5, 3);
  const MatrixXd expect = oracle::triple_loop_covariance(x);
  CHECK((sample_covariance(DataMatrix(x)).dense() - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sample_covariance matches the triple loop on random shapes") {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 10; ++rep) {
    const auto n = 1 + static_cast<Eigen::Index>(gen() % 30);
    const auto p = 1 + static_cast<Eigen::Index>(gen() % 8);
    const MatrixXd x = oracle::random_matrix(gen, n, p);
    CHECK((sample_covariance(DataMatrix(x)).dense() - oracle::triple_loop_covariance(x)).cwiseAbs().maxCoeff() <=
          1e-12);
  }
}

TEST_CASE("cholesky examples") {
  CHECK(cholesky(SymMatrix::identity(3)) == MatrixXd::Identity(3, 3));
  MatrixXd m(2, 2);
  m << 4, 2, 2, 5;
  MatrixXd l(2, 2);
  l << 2, 0, 1, 2;
  CHECK((cholesky(SymMatrix::from_dense(m)) - l).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 gen(3);
  const MatrixXd a = oracle::random_spd(gen, 6);
  const MatrixXd f = cholesky(SymMatrix::from_dense(a));
  CHECK((f * f.transpose() - a).cwiseAbs().maxCoeff() <= 1e-10 * a.cwiseAbs().maxCoeff());
  CHECK(f.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cholesky names the failing pivot") {
  MatrixXd m = MatrixXd::Identity(4, 4);
  m(2, 2) = -1.0;
  try {
    cholesky(SymMatrix::from_dense(m));
    FAIL("expected DefinitenessError");
  } catch (const DefinitenessError& e) {
    CHECK(e.pivot() == 2);
  }
  MatrixXd singular(2, 2);
  singular << 1, 1, 1, 1;
  CHECK_THROWS_AS(cholesky(singular), DefinitenessError);
}

TEST_CASE("property: cholesky reconstructs random SPD matrices") {
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = 1 + static_cast<Eigen::Index>(gen() % 12);
    const MatrixXd a = oracle::random_spd(gen, p, 0.1);
    const MatrixXd f = cholesky(a);
    CHECK((f * f.transpose() - a).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("invert_spd examples") {
  CHECK(invert_spd(SymMatrix::identity(3)) == SymMatrix::identity(3));
  const SymMatrix inv = invert_spd(SymMatrix::diagonal({2.0, 4.0}));
  CHECK(inv(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(inv(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(inv(0, 1) == 0.0);

  const TrueModel chain = make_precision(chain_model(4, 0.3));
  const MatrixXd prod = chain.theta.dense() * invert_spd(chain.theta).dense();
  CHECK((prod - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK_THROWS_AS(invert_spd(SymMatrix::diagonal({1.0, 0.0})), DefinitenessError);
}

TEST_CASE("property: invert_spd identity and involution") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto p = 1 + static_cast<Eigen::Index>(gen() % 10);
    const SymMatrix m = SymMatrix::from_dense(oracle::random_spd(gen, p));
    const SymMatrix inv = invert_spd(m);
    CHECK((m.dense() * inv.dense() - MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((invert_spd(inv).dense() - m.dense()).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("log_det_spd") {
  CHECK(log_det_spd(SymMatrix::diagonal({2.0, 3.0})) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  std::mt19937_64 gen(6);
  const MatrixXd a = oracle::random_spd(gen, 5);
  CHECK(log_det_spd(SymMatrix::from_dense(a)) == doctest::Approx(oracle::log_det(a)).epsilon(1e-12));
}

TEST_CASE("sup_norm and linf_operator_norm") {
  CHECK(sup_norm(SymMatrix(3)) == 0.0);
  MatrixXd m(2, 2);
  m << 1, -3, -3, 2;
  CHECK(sup_norm(SymMatrix::from_dense(m)) == 3.0);
  CHECK(linf_operator_norm(SymMatrix::identity(3)) == 1.0);

  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd r = oracle::random_matrix(gen, 6, 6);
    double scan = 0.0, rows = 0.0;
    for (int i = 0; i < 6; ++i) {
      double row = 0.0;
      for (int j = 0; j < 6; ++j) {
        scan = std::max(scan, std::abs(r(i, j)));
        row += std::abs(r(i, j));
      }
      rows = std::max(rows, row);
    }
    CHECK(sup_norm(r) == scan);
    CHECK(linf_operator_norm(r) == doctest::Approx(rows).epsilon(1e-15));
  }

  // Toeplitz Sigma_ij = 0.5^|i-j|, p = 20: the largest row sum is the middle row.
  const Index p = 20;
  SymMatrix t(p);
  double best = 0.0;
  for (Index i = 0; i < p; ++i) {
    double row = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double v = std::pow(0.5, std::abs(static_cast<double>(i) - static_cast<double>(j)));
      if (j >= i) t.set(i, j, v);
      row += v;
    }
    best = std::max(best, row);
  }
  CHECK(linf_operator_norm(t) == doctest::Approx(best).epsilon(1e-15));
  CHECK(linf_operator_norm(t) <= 2.0 / (1.0 - 0.5) - 1.0);
}

TEST_CASE("std_normal_quantile examples") {
  CHECK(std_normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  const double z = std_normal_quantile(0.975);
  CHECK(z == doctest::Approx(oracle::bisect_quantile(0.975)).epsilon(1e-12));
  CHECK(z == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(std_normal_quantile(0.025) == doctest::Approx(-z).epsilon(1e-12));
  CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(std::nan("")), DomainError);
}

TEST_CASE("property: quantile inverts Phi and is strictly increasing") {
  double prev = -INFINITY;
  for (int k = 1; k < 10000; ++k) {
    const double q = k / 10000.0;
    const double x = std_normal_quantile(q);
    CHECK(x > prev);
    prev = x;
    CHECK(std::abs(static_cast<double>(oracle::phi(x)) - q) <= 1e-9);
  }
  for (double q : {1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 1.0 - 1e-5, 1.0 - 1e-10, 1.0 - 1e-15}) {
    const double x = std_normal_quantile(q);
    CHECK(x == doctest::Approx(oracle::bisect_quantile(q)).epsilon(1e-9));
  }
}

TEST_CASE("std_normal_cdf and pdf") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  for (double x : {-8.0, -3.0, -1.0, 0.3, 2.0, 6.0})
    CHECK(std_normal_cdf(x) == doctest::Approx(static_cast<double>(oracle::phi(x))).epsilon(1e-14));
  CHECK(std_normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
}

TEST_CASE("EdgeSet semantics") {
  EdgeSet s(4);
  s.insert(0, 2);
  CHECK(s.contains(2, 0));
  CHECK(s.size() == 2);
  s.insert(2, 0);
  CHECK(s.size() == 2);
  s.insert(1, 1);
  CHECK(s.size() == 3);
  CHECK(s.off_diagonal_size() == 2);
  CHECK(s.max_row_cardinality() == 1);
  const auto pairs = s.pairs();
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0] == std::pair<Index, Index>{0, 2});
  CHECK(pairs[1] == std::pair<Index, Index>{1, 1});
  CHECK(pairs[2] == std::pair<Index, Index>{2, 0});
  CHECK(s.complement().size() == 13);
  CHECK(EdgeSet::full(4).size() == 16);
  CHECK(EdgeSet::diagonal(4).unite(s).size() == 6);
  CHECK(EdgeSet::diagonal(4).intersect(s).size() == 1);
  CHECK_THROWS_AS(s.insert(4, 0), InputError);

  SymMatrix m(3);
  m.set(0, 0, 1.0);
  m.set(0, 1, 0.01);
  CHECK(EdgeSet::nonzeros(m).size() == 3);
  CHECK(EdgeSet::nonzeros(m, 0.1).size() == 1);
}

TEST_CASE("HessianView matches the materialized Kronecker product for p <= 4") {
  std::mt19937_64 gen(8);
  for (Index p = 1; p <= 4; ++p) {
    const MatrixXd sigma = oracle::random_spd(gen, static_cast<Eigen::Index>(p));
    const HessianView h(SymMatrix::from_dense(sigma));
    const MatrixXd k = oracle::kronecker(sigma, sigma);
    for (Index a = 0; a < p * p; ++a)
      for (Index b = 0; b < p * p; ++b)
        CHECK(h.at_flat(a, b) == k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    CHECK(h.flat(p - 1, 0) == (p - 1) * p);
    CHECK(h.unflat(h.flat(p - 1, 0)) == std::pair<Index, Index>{p - 1, 0});
  }
  const HessianView h(SymMatrix::identity(2));
  const std::vector<std::pair<Index, Index>> rows{{0, 0}, {1, 1}};
  const MatrixXd blk = h.block(rows, rows);
  CHECK(blk == MatrixXd::Identity(2, 2));
}
