#pragma once

// Dense symmetric matrices, data matrices, edge sets and the linear algebra
// shared by the estimators.

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsglasso/errors.hpp"

namespace dsglasso {

using Index = std::size_t;

// Symmetric p x p matrix with a single stored value per unordered pair
// (packed upper triangle), so entry(i,j) == entry(j,i) holds by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Index dim, double fill = 0.0);

  static SymMatrix identity(Index dim);
  static SymMatrix diagonal(const std::vector<double>& diag);
  // Averages m with its transpose. Throws InputError if m is not square, is
  // non-finite, or if |m(i,j) - m(j,i)| exceeds asymmetry_tol.
  static SymMatrix from_dense(const Eigen::MatrixXd& m, double asymmetry_tol = 1e-8);

  Index dim() const noexcept { return dim_; }

  double operator()(Index i, Index j) const noexcept { return data_[offset(i, j)]; }
  // Rejects non-finite values.
  void set(Index i, Index j, double value);

  Eigen::MatrixXd dense() const;

  bool operator==(const SymMatrix& other) const = default;

 private:
  Index offset(Index i, Index j) const noexcept {
    if (i > j) std::swap(i, j);
    // row-major packed upper triangle
    return i * dim_ - i * (i + 1) / 2 + j;
  }

  Index dim_ = 0;
  std::vector<double> data_;
};

// n x p observation matrix, one observation per row.
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(Eigen::MatrixXd rows);

  Index n() const noexcept { return static_cast<Index>(rows_.rows()); }
  Index p() const noexcept { return static_cast<Index>(rows_.cols()); }
  const Eigen::MatrixXd& rows() const noexcept { return rows_; }
  double operator()(Index r, Index c) const { return rows_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); }

  bool operator==(const DataMatrix& other) const { return rows_ == other.rows_; }

 private:
  Eigen::MatrixXd rows_;
};

// Set of index pairs on V x V, closed under transposition.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(Index dim);

  static EdgeSet diagonal(Index dim);
  static EdgeSet full(Index dim);
  // Pairs (i,j) with |m(i,j)| > threshold (threshold 0 gives the exact
  // nonzero pattern). Diagonal included when nonzero.
  static EdgeSet nonzeros(const SymMatrix& m, double threshold = 0.0);

  Index dim() const noexcept { return dim_; }

  // Inserts (i,j) and (j,i).
  void insert(Index i, Index j);
  bool contains(Index i, Index j) const noexcept { return mask_[i * dim_ + j] != 0; }

  // Number of ordered pairs (s).
  Index size() const noexcept { return count_; }
  // Maximum row cardinality (d), diagonal pairs included.
  Index max_row_cardinality() const;
  // Off-diagonal ordered pairs only.
  Index off_diagonal_size() const;

  // Ordered pairs in row-stacking order.
  std::vector<std::pair<Index, Index>> pairs() const;
  // Ordered pairs of V x V not in the set, row-stacking order.
  std::vector<std::pair<Index, Index>> complement() const;

  EdgeSet unite(const EdgeSet& other) const;
  EdgeSet intersect(const EdgeSet& other) const;

  bool operator==(const EdgeSet& other) const = default;

 private:
  Index dim_ = 0;
  Index count_ = 0;
  std::vector<unsigned char> mask_;
};

// Hessian Gamma(Theta) = Sigma (x) Sigma of the negative Gaussian
// log-likelihood, indexed by pairs of edges. Never materialized.
class HessianView {
 public:
  explicit HessianView(SymMatrix sigma) : sigma_(std::move(sigma)) {}

  Index dim() const noexcept { return sigma_.dim(); }
  const SymMatrix& sigma() const noexcept { return sigma_; }

  // Gamma_{(i,j),(k,l)} = Sigma_ik * Sigma_lj.
  double operator()(Index i, Index j, Index k, Index l) const noexcept {
    return sigma_(i, k) * sigma_(l, j);
  }

  // Row-stacking vectorization: (i,j) -> i*p + j.
  Index flat(Index i, Index j) const noexcept { return i * dim() + j; }
  std::pair<Index, Index> unflat(Index a) const noexcept { return {a / dim(), a % dim()}; }

  double at_flat(Index a, Index b) const noexcept {
    const auto [i, j] = unflat(a);
    const auto [k, l] = unflat(b);
    return (*this)(i, j, k, l);
  }

  // Gamma_{TT'} for the given ordered pair lists.
  Eigen::MatrixXd block(const std::vector<std::pair<Index, Index>>& rows,
                        const std::vector<std::pair<Index, Index>>& cols) const;

 private:
  SymMatrix sigma_;
};

// Thrown when an iterative solver stops before its tolerance is met.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, SymMatrix last_iterate, double residual, int iterations)
      : Error(what), last_iterate_(std::move(last_iterate)), residual_(residual), iterations_(iterations) {}

  const SymMatrix& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  SymMatrix last_iterate_;
  double residual_;
  int iterations_;
};

// (1/n) X^T X, no centering.
SymMatrix sample_covariance(const DataMatrix& data);

// Lower-triangular L with L L^T = m. Throws DefinitenessError naming the
// first non-positive pivot.
Eigen::MatrixXd cholesky(const SymMatrix& m);
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m);

SymMatrix invert_spd(const SymMatrix& m);
Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m);
double log_det_spd(const SymMatrix& m);

double sup_norm(const SymMatrix& m);
double sup_norm(const Eigen::MatrixXd& m);
double linf_operator_norm(const SymMatrix& m);
double linf_operator_norm(const Eigen::MatrixXd& m);

double std_normal_cdf(double x);
double std_normal_pdf(double x);
// Inverse of the standard normal CDF; throws DomainError outside (0,1).
double std_normal_quantile(double q);

}  // namespace dsglasso
