#pragma once

// De-sparsified graphical Lasso T = 2 Theta - Theta Sigma Theta, entrywise
// confidence intervals and significance-thresholded edge selection.

#include <cmath>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "dsglasso/core.hpp"

namespace dsglasso {

struct DesparsifiedEstimate {
  SymMatrix t_hat;
  SymMatrix theta_hat;
  SymMatrix sigma_hat;
};

DesparsifiedEstimate desparsify(const SymMatrix& theta_hat, const SymMatrix& sigma_hat);

// Gaussian plug-in variance Theta_ii Theta_jj + Theta_ij^2.
double plugin_variance(const SymMatrix& theta_hat, Index i, Index j);
// All entries at once.
SymMatrix plugin_variances(const SymMatrix& theta_hat);

// Intervals center_ij +- z_{1-alpha/2} sigma_ij / sqrt(n).
class IntervalTable {
 public:
  IntervalTable(SymMatrix center, SymMatrix variance, Index n, double alpha);

  Index dim() const noexcept { return center_.dim(); }
  double level() const noexcept { return 1.0 - alpha_; }
  double alpha() const noexcept { return alpha_; }
  Index n() const noexcept { return n_; }
  double quantile() const noexcept { return z_; }

  double center(Index i, Index j) const noexcept { return center_(i, j); }
  double variance(Index i, Index j) const noexcept { return variance_(i, j); }
  double sigma(Index i, Index j) const noexcept { return std::sqrt(variance_(i, j)); }
  double half_width(Index i, Index j) const noexcept { return z_ * sigma(i, j) / std::sqrt(static_cast<double>(n_)); }
  double lo(Index i, Index j) const noexcept { return center(i, j) - half_width(i, j); }
  double hi(Index i, Index j) const noexcept { return center(i, j) + half_width(i, j); }
  double length(Index i, Index j) const noexcept { return 2.0 * half_width(i, j); }
  bool covers(Index i, Index j, double value) const noexcept { return lo(i, j) <= value && value <= hi(i, j); }

  const SymMatrix& centers() const noexcept { return center_; }
  const SymMatrix& variances() const noexcept { return variance_; }

  // Columns i, j, t_hat, sigma_hat, lo, hi for i <= j, 1-based indices.
  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;

 private:
  SymMatrix center_;
  SymMatrix variance_;
  Index n_;
  double alpha_;
  double z_;
};

// Throws DomainError unless 0 < alpha < 1 and InputError if n < 2.
IntervalTable confidence_intervals(const DesparsifiedEstimate& est, Index n, double alpha);

// Off-diagonal pairs with |T_ij| > z_{1 - alpha/(p(p-1))} sigma_ij / sqrt(n),
// sigma from the plug-in variance of Theta_hat.
EdgeSet threshold_edges(const DesparsifiedEstimate& est, Index n, double alpha);

// sqrt(n) (T_ij - Theta*_ij) / sigma_hat_ij.
double standardized_statistic(const DesparsifiedEstimate& est, const SymMatrix& theta_star, Index n, Index i, Index j);

}  // namespace dsglasso
