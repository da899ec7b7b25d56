#include "dsglasso/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dsglasso {

// ---------------------------------------------------------------------------
// SymMatrix

SymMatrix::SymMatrix(Index dim, double fill) : dim_(dim), data_(dim * (dim + 1) / 2, fill) {
  if (dim == 0) throw InputError("SymMatrix: dimension must be positive");
  if (!std::isfinite(fill)) throw InputError("SymMatrix: non-finite fill value");
}

SymMatrix SymMatrix::identity(Index dim) {
  SymMatrix m(dim);
  for (Index i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(const std::vector<double>& diag) {
  SymMatrix m(diag.size());
  for (Index i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m, double asymmetry_tol) {
  if (m.rows() != m.cols() || m.rows() == 0) throw InputError("SymMatrix: matrix must be square and non-empty");
  const auto p = static_cast<Index>(m.rows());
  SymMatrix out(p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i; j < p; ++j) {
      const double a = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double b = m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      if (!std::isfinite(a) || !std::isfinite(b)) throw InputError("SymMatrix: non-finite entry");
      if (std::abs(a - b) > asymmetry_tol * std::max(1.0, std::max(std::abs(a), std::abs(b)))) {
        throw InputError("SymMatrix: asymmetry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      out.data_[out.offset(i, j)] = i == j ? a : 0.5 * (a + b);
    }
  }
  return out;
}

void SymMatrix::set(Index i, Index j, double value) {
  if (!std::isfinite(value)) throw InputError("SymMatrix: non-finite entry");
  data_[offset(i, j)] = value;
}

Eigen::MatrixXd SymMatrix::dense() const {
  const auto p = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd m(p, p);
  for (Index i = 0; i < dim_; ++i) {
    for (Index j = i; j < dim_; ++j) {
      const double v = data_[offset(i, j)];
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// DataMatrix

DataMatrix::DataMatrix(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.rows() < 1 || rows_.cols() < 1) throw InputError("DataMatrix: need n >= 1 and p >= 1");
  if (!rows_.allFinite()) throw InputError("DataMatrix: non-finite entry");
}

// ---------------------------------------------------------------------------
// EdgeSet

EdgeSet::EdgeSet(Index dim) : dim_(dim), mask_(dim * dim, 0) {
  if (dim == 0) throw InputError("EdgeSet: dimension must be positive");
}

EdgeSet EdgeSet::diagonal(Index dim) {
  EdgeSet s(dim);
  for (Index i = 0; i < dim; ++i) s.insert(i, i);
  return s;
}

EdgeSet EdgeSet::full(Index dim) {
  EdgeSet s(dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = i; j < dim; ++j) s.insert(i, j);
  return s;
}

EdgeSet EdgeSet::nonzeros(const SymMatrix& m, double threshold) {
  EdgeSet s(m.dim());
  for (Index i = 0; i < m.dim(); ++i)
    for (Index j = i; j < m.dim(); ++j)
      if (std::abs(m(i, j)) > threshold) s.insert(i, j);
  return s;
}

void EdgeSet::insert(Index i, Index j) {
  if (i >= dim_ || j >= dim_) throw InputError("EdgeSet: index out of range");
  auto mark = [this](Index a, Index b) {
    auto& cell = mask_[a * dim_ + b];
    if (!cell) {
      cell = 1;
      ++count_;
    }
  };
  mark(i, j);
  mark(j, i);
}

Index EdgeSet::max_row_cardinality() const {
  Index best = 0;
  for (Index i = 0; i < dim_; ++i) {
    Index row = 0;
    for (Index j = 0; j < dim_; ++j) row += mask_[i * dim_ + j];
    best = std::max(best, row);
  }
  return best;
}

Index EdgeSet::off_diagonal_size() const {
  Index diag = 0;
  for (Index i = 0; i < dim_; ++i) diag += mask_[i * dim_ + i];
  return count_ - diag;
}

std::vector<std::pair<Index, Index>> EdgeSet::pairs() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(count_);
  for (Index i = 0; i < dim_; ++i)
    for (Index j = 0; j < dim_; ++j)
      if (mask_[i * dim_ + j]) out.emplace_back(i, j);
  return out;
}

std::vector<std::pair<Index, Index>> EdgeSet::complement() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(dim_ * dim_ - count_);
  for (Index i = 0; i < dim_; ++i)
    for (Index j = 0; j < dim_; ++j)
      if (!mask_[i * dim_ + j]) out.emplace_back(i, j);
  return out;
}

EdgeSet EdgeSet::unite(const EdgeSet& other) const {
  if (other.dim_ != dim_) throw InputError("EdgeSet: dimension mismatch");
  EdgeSet out = *this;
  for (const auto& [i, j] : other.pairs()) out.insert(i, j);
  return out;
}

EdgeSet EdgeSet::intersect(const EdgeSet& other) const {
  if (other.dim_ != dim_) throw InputError("EdgeSet: dimension mismatch");
  EdgeSet out(dim_);
  for (const auto& [i, j] : pairs())
    if (other.contains(i, j)) out.insert(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// HessianView

Eigen::MatrixXd HessianView::block(const std::vector<std::pair<Index, Index>>& rows,
                                   const std::vector<std::pair<Index, Index>>& cols) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (Index a = 0; a < rows.size(); ++a) {
    const auto [i, j] = rows[a];
    for (Index b = 0; b < cols.size(); ++b) {
      const auto [k, l] = cols[b];
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = (*this)(i, j, k, l);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra

SymMatrix sample_covariance(const DataMatrix& data) {
  if (data.n() < 1) throw InputError("sample_covariance: empty data");
  const Eigen::MatrixXd& x = data.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(data.n()));
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return SymMatrix::from_dense(s, 0.0);
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InputError("cholesky: matrix must be square");
  const Eigen::Index p = m.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw DefinitenessError("cholesky: matrix is not positive definite", static_cast<std::size_t>(j));
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    if (j + 1 < p) {
      const Eigen::Index rest = p - j - 1;
      l.col(j).tail(rest) =
          (m.col(j).tail(rest) - l.bottomLeftCorner(rest, j) * l.row(j).head(j).transpose()) / ljj;
    }
  }
  return l;
}

Eigen::MatrixXd cholesky(const SymMatrix& m) { return cholesky(m.dense()); }

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd l = cholesky(m);
  const Eigen::Index p = m.rows();
  const Eigen::MatrixXd linv = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd inv = linv.transpose() * linv;
  inv.triangularView<Eigen::StrictlyLower>() = inv.transpose();
  return inv;
}

SymMatrix invert_spd(const SymMatrix& m) { return SymMatrix::from_dense(invert_spd(m.dense()), 0.0); }

double log_det_spd(const SymMatrix& m) {
  const Eigen::MatrixXd l = cholesky(m);
  return 2.0 * l.diagonal().array().log().sum();
}

double sup_norm(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
double sup_norm(const SymMatrix& m) { return sup_norm(m.dense()); }

double linf_operator_norm(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}
double linf_operator_norm(const SymMatrix& m) { return linf_operator_norm(m.dense()); }

// ---------------------------------------------------------------------------
// Standard normal

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double std_normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("std_normal_quantile: probability must lie in (0,1)");

  // Acklam's rational approximation, relative error ~1e-9 before refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  constexpr double high = 1.0 - low;

  double x;
  if (q < low) {
    const double t = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  } else if (q <= high) {
    const double u = q - 0.5;
    const double r = u * u;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double t = std::sqrt(-2.0 * std::log1p(-q));
    x = -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  }

  // One Halley step against the erfc-based CDF. The upper tail is refined
  // through the complement to avoid cancellation in 1 - q.
  double e;
  if (q > 0.5) {
    e = (1.0 - q) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  } else {
    e = std_normal_cdf(x) - q;
  }
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace dsglasso
