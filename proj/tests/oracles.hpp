#pragma once

// Independent reference computations used as test oracles. Nothing here
// calls into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;

inline MatrixXd triple_loop_covariance(const MatrixXd& x) {
  const auto n = x.rows(), p = x.cols();
  MatrixXd s = MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) {
      long double acc = 0.0L;
      for (Eigen::Index r = 0; r < n; ++r) acc += static_cast<long double>(x(r, i)) * x(r, j);
      s(i, j) = static_cast<double>(acc / n);
    }
  return s;
}

inline MatrixXd triple_loop_product(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd c = MatrixXd::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(acc);
    }
  return c;
}

// Phi in extended precision.
inline long double phi(long double x) { return 0.5L * std::erfc(-x / std::sqrt(2.0L)); }

inline double bisect_quantile(double q) {
  // Upper half by symmetry so the tail probability keeps full precision.
  if (q > 0.5) return -bisect_quantile(1.0 - q);
  long double lo = -40.0L, hi = 40.0L;
  for (int it = 0; it < 200; ++it) {
    const long double mid = 0.5L * (lo + hi);
    (phi(mid) < q ? lo : hi) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

// Row-stacking Kronecker product A (x) B: entry (a*p+b, c*p+d) = A(a,c) B(b,d).
inline MatrixXd kronecker(const MatrixXd& a, const MatrixXd& b) {
  const auto p = a.rows(), q = b.rows();
  MatrixXd k(p * q, p * q);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index c = 0; c < p; ++c)
      for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index d = 0; d < q; ++d) k(i * q + j, c * q + d) = a(i, c) * b(j, d);
  return k;
}

// Flat indices (row stacking) where the mask is nonzero.
inline std::vector<Eigen::Index> flat_support(const MatrixXd& theta) {
  std::vector<Eigen::Index> out;
  const auto p = theta.rows();
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      if (theta(i, j) != 0.0) out.push_back(i * p + j);
  return out;
}

struct KappaAlpha {
  double kappa_gamma;
  double alpha;
};

// Materializes Gamma = Sigma (x) Sigma in full and reads both constants off it.
inline KappaAlpha materialized_constants(const MatrixXd& theta) {
  const auto p = theta.rows();
  const MatrixXd sigma = theta.fullPivLu().inverse();
  const MatrixXd gamma = kronecker(sigma, sigma);
  const auto s = flat_support(theta);
  std::vector<Eigen::Index> sc;
  for (Eigen::Index a = 0; a < p * p; ++a)
    if (std::find(s.begin(), s.end(), a) == s.end()) sc.push_back(a);
  const auto m = static_cast<Eigen::Index>(s.size());
  MatrixXd gss(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) gss(r, c) = gamma(s[r], s[c]);
  const MatrixXd inv = gss.fullPivLu().inverse();
  double kappa = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) kappa = std::max(kappa, inv.row(r).cwiseAbs().sum());
  double worst = 0.0;
  for (Eigen::Index e : sc) {
    Eigen::RowVectorXd row(m);
    for (Eigen::Index c = 0; c < m; ++c) row(c) = gamma(e, s[c]);
    worst = std::max(worst, (row * inv).cwiseAbs().sum());
  }
  return {kappa, 1.0 - worst};
}

inline double log_det(const MatrixXd& m) {
  const Eigen::LDLT<MatrixXd> ldlt(m);
  return ldlt.vectorD().array().log().sum();
}

inline bool is_pd(const MatrixXd& m) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 0.0;
}

inline double glasso_objective(const MatrixXd& s, const MatrixXd& theta, double lambda) {
  double pen = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.rows(); ++j)
      if (i != j) pen += std::abs(theta(i, j));
  return (theta * s).trace() - log_det(theta) + lambda * pen;
}

// Proximal gradient descent with backtracking on the primal objective; slow
// but independent of the column-wise solver.
inline MatrixXd proximal_glasso(const MatrixXd& s, double lambda, int iterations = 20000) {
  const auto p = s.rows();
  MatrixXd theta = MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) theta(i, i) = 1.0 / s(i, i);
  auto smooth = [&](const MatrixXd& t) { return (t * s).trace() - log_det(t); };
  auto prox = [&](const MatrixXd& z, double step) {
    MatrixXd out = z;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) {
        if (i == j) continue;
        const double v = z(i, j), t = step * lambda;
        out(i, j) = v > t ? v - t : (v < -t ? v + t : 0.0);
      }
    return out;
  };
  double step = 1.0;
  double prev = glasso_objective(s, theta, lambda);
  for (int it = 0; it < iterations; ++it) {
    const MatrixXd grad = s - theta.inverse();
    const double f0 = smooth(theta);
    MatrixXd next;
    for (;;) {
      next = prox(theta - step * grad, step);
      next = 0.5 * (next + next.transpose());
      if (is_pd(next)) {
        const MatrixXd d = next - theta;
        const double bound = f0 + (grad.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step);
        if (smooth(next) <= bound + 1e-15) break;
      }
      step *= 0.5;
    }
    theta = next;
    const double obj = glasso_objective(s, theta, lambda);
    if (std::abs(prev - obj) < 1e-15 * std::max(1.0, std::abs(obj)) && it > 50) break;
    prev = obj;
    step *= 1.25;
  }
  return theta;
}

// Fisher information over free parameters (k <= l) by central differences of
// -1/2 log det Theta, the part of the expected Gaussian log-likelihood with
// a nonzero Hessian.
inline MatrixXd finite_difference_fisher(const MatrixXd& theta,
                                         const std::vector<std::pair<Eigen::Index, Eigen::Index>>& params,
                                         double h = 1e-4) {
  const auto m = static_cast<Eigen::Index>(params.size());
  auto bump = [&](MatrixXd t, std::size_t a, double d) {
    const auto [i, j] = params[a];
    t(i, j) += d;
    if (i != j) t(j, i) += d;
    return t;
  };
  MatrixXd info(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) {
      const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
      const double fpp = log_det(bump(bump(theta, ua, h), ub, h));
      const double fpm = log_det(bump(bump(theta, ua, h), ub, -h));
      const double fmp = log_det(bump(bump(theta, ua, -h), ub, h));
      const double fmm = log_det(bump(bump(theta, ua, -h), ub, -h));
      info(a, b) = -0.5 * (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  return info;
}

inline MatrixXd random_spd(std::mt19937_64& gen, Eigen::Index p, double ridge = 1.0) {
  std::normal_distribution<double> z;
  MatrixXd b(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) b(i, j) = z(gen);
  return b.transpose() * b + ridge * MatrixXd::Identity(p, p);
}

inline MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> z;
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = z(gen);
  return m;
}

// sup_x |F_n(x) - Phi(x)| in extended precision.
inline double ks_normal(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = static_cast<long double>(v.size());
  long double d = 0.0L;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const long double f = phi(v[k]);
    d = std::max({d, (k + 1) / n - f, f - k / n});
  }
  return static_cast<double>(d);
}

}  // namespace oracle
