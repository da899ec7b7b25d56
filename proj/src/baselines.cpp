#include "dsglasso/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dsglasso {

namespace {

using Eigen::MatrixXd;

constexpr double kDivergenceBound = 1e12;
// Gradient residual below which full Newton steps replace coordinate sweeps.
constexpr double kNewtonSwitch = 1e-1;

// I_ab = 1/2 sum over the positions of a and b of Gamma, Gamma = sigma kron sigma.
MatrixXd fisher_from_sigma(const MatrixXd& sigma, const std::vector<std::pair<Index, Index>>& params) {
  const auto m = static_cast<Eigen::Index>(params.size());
  MatrixXd info(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto [i, j] = params[static_cast<std::size_t>(a)];
    const auto ai = static_cast<Eigen::Index>(i), aj = static_cast<Eigen::Index>(j);
    for (Eigen::Index b = a; b < m; ++b) {
      const auto [k, l] = params[static_cast<std::size_t>(b)];
      const auto bk = static_cast<Eigen::Index>(k), bl = static_cast<Eigen::Index>(l);
      // Positions (i,j),(j,i) against (k,l),(l,k); Gamma_{(r,c),(r2,c2)} = sigma(r,r2) sigma(c2,c).
      double v = sigma(ai, bk) * sigma(bl, aj);
      if (k != l) v += sigma(ai, bl) * sigma(bk, aj);
      if (i != j) {
        v += sigma(aj, bk) * sigma(bl, ai);
        if (k != l) v += sigma(aj, bl) * sigma(bk, ai);
      }
      info(a, b) = info(b, a) = 0.5 * v;
    }
  }
  return info;
}

struct PairTerms {
  double a;  // W_ij
  double b;  // W_ii W_jj
  double c;  // Sigma_hat_ij
};

// log det(Theta + delta E_ij) - log det(Theta) for E_ij = e_i e_j' + e_j e_i'.
inline double det_ratio(const PairTerms& t, double delta) {
  const double u = 1.0 + delta * t.a;
  return u * u - delta * delta * t.b;
}

inline double pair_objective(const PairTerms& t, double delta) {
  const double q = det_ratio(t, delta);
  if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(q) - 2.0 * t.c * delta;
}

// Maximizes the concave one-dimensional objective along E_ij by damped Newton
// steps; the step is halved until the determinant ratio stays positive and the
// objective does not decrease.
double newton_pair_step(const PairTerms& t) {
  double delta = 0.0;
  double value = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double q = det_ratio(t, delta);
    const double dq = 2.0 * t.a * (1.0 + delta * t.a) - 2.0 * delta * t.b;
    const double d2q = 2.0 * (t.a * t.a - t.b);
    const double grad = dq / q - 2.0 * t.c;
    const double hess = (d2q * q - dq * dq) / (q * q);
    if (std::abs(grad) < 1e-15 || !(hess < 0.0)) break;
    double step = -grad / hess;
    double next = delta + step;
    double next_value = pair_objective(t, next);
    int halvings = 0;
    while (!(next_value >= value) && halvings < 60) {
      step *= 0.5;
      next = delta + step;
      next_value = pair_objective(t, next);
      ++halvings;
    }
    if (halvings == 60) break;
    const bool done = std::abs(next - delta) <= 1e-16 * std::max(1.0, std::abs(delta));
    delta = next;
    value = next_value;
    if (done) break;
  }
  return delta;
}

double gradient_residual(const MatrixXd& w, const MatrixXd& s, const EdgeSet& support) {
  double worst = 0.0;
  for (const auto& [i, j] : support.pairs()) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto c = static_cast<Eigen::Index>(j);
    worst = std::max(worst, std::abs(w(r, c) - s(r, c)));
  }
  return worst;
}

double log_likelihood(const MatrixXd& theta, const MatrixXd& s) {
  return 2.0 * cholesky(theta).diagonal().array().log().sum() - (theta.array() * s.array()).sum();
}

// One Newton step on log det Theta - tr(Theta Sigma_hat) over the free
// parameters, with the Hessian -2 I built from Gamma = W kron W. The step is
// halved until Theta stays positive definite and the likelihood does not drop.
// Returns false (leaving theta, w untouched) if no such step is found.
bool newton_step(const MatrixXd& s, const EdgeSet& free_set, MatrixXd& theta, MatrixXd& w) {
  const auto params = free_parameters(free_set);
  const auto m = static_cast<Eigen::Index>(params.size());
  const Eigen::MatrixXd info = fisher_from_sigma(w, params);
  Eigen::VectorXd g(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto [i, j] = params[static_cast<std::size_t>(a)];
    const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
    g(a) = (i == j ? 1.0 : 2.0) * (w(r, c) - s(r, c));
  }
  const Eigen::LLT<MatrixXd> llt(2.0 * info);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd dir = llt.solve(g);
  const double base = log_likelihood(theta, s);
  double t = 1.0;
  for (int k = 0; k < 40; ++k, t *= 0.5) {
    MatrixXd next = theta;
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto [i, j] = params[static_cast<std::size_t>(a)];
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      next(r, c) += t * dir(a);
      if (r != c) next(c, r) += t * dir(a);
    }
    try {
      // Near the optimum the change in likelihood is below rounding, so ties are accepted.
      if (log_likelihood(next, s) < base - 1e-12 * (1.0 + std::abs(base))) continue;
      MatrixXd next_w = invert_spd(next);
      theta = std::move(next);
      w = std::move(next_w);
      return true;
    } catch (const DefinitenessError&) {
    }
  }
  return false;
}

}  // namespace

std::vector<std::pair<Index, Index>> free_parameters(const EdgeSet& support) {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < support.dim(); ++i)
    for (Index j = i; j < support.dim(); ++j)
      if (i == j || support.contains(i, j)) out.emplace_back(i, j);
  return out;
}

ConstrainedMleSolution constrained_mle(const SymMatrix& sigma_hat, const EdgeSet& support, double tol, int max_iter) {
  if (support.dim() != sigma_hat.dim()) throw InputError("constrained_mle: dimension mismatch");
  if (!(tol > 0.0) || max_iter < 1) throw InputError("constrained_mle: bad tolerance or iteration limit");
  const Index p = sigma_hat.dim();
  for (Index i = 0; i < p; ++i)
    if (!(sigma_hat(i, i) > 0.0)) throw InputError("constrained_mle: sample covariance needs a positive diagonal");

  const EdgeSet free_set = support.unite(EdgeSet::diagonal(p));
  const MatrixXd s = sigma_hat.dense();
  const auto ep = static_cast<Eigen::Index>(p);

  MatrixXd theta = MatrixXd::Zero(ep, ep);
  for (Eigen::Index i = 0; i < ep; ++i) theta(i, i) = 1.0 / s(i, i);
  MatrixXd w = invert_spd(theta);

  std::vector<std::pair<Eigen::Index, Eigen::Index>> off;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      if (free_set.contains(i, j)) off.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

  Eigen::VectorXd wi(ep), wj(ep);
  double residual = gradient_residual(w, s, free_set);
  for (int iter = 1; iter <= max_iter; ++iter) {
    if (residual <= kNewtonSwitch) {
      if (newton_step(s, free_set, theta, w)) {
        residual = gradient_residual(w, s, free_set);
        if (residual <= tol) return {SymMatrix::from_dense(theta, 0.0), free_set, iter, residual};
        continue;
      }
    }
    // Diagonal coordinates: the one-dimensional maximizer is explicit,
    // W_ii/(1 + delta W_ii) = Sigma_hat_ii.
    for (Eigen::Index i = 0; i < ep; ++i) {
      const double delta = 1.0 / s(i, i) - 1.0 / w(i, i);
      if (delta == 0.0) continue;
      theta(i, i) += delta;
      wi = w.col(i);
      w.noalias() -= (delta / (1.0 + delta * wi(i))) * wi * wi.transpose();
    }
    for (const auto& [i, j] : off) {
      const PairTerms t{w(i, j), w(i, i) * w(j, j), s(i, j)};
      const double delta = newton_pair_step(t);
      if (delta == 0.0) continue;
      theta(i, j) += delta;
      theta(j, i) += delta;
      // Woodbury update for the symmetric rank-2 change delta (e_i e_j' + e_j e_i').
      wi = w.col(i);
      wj = w.col(j);
      const double m11 = w(i, i);
      const double m22 = w(j, j);
      const double m12 = w(i, j) + 1.0 / delta;
      const double det = m11 * m22 - m12 * m12;
      const double n11 = m22 / det, n22 = m11 / det, n12 = -m12 / det;
      w.noalias() -= n11 * wi * wi.transpose() + n22 * wj * wj.transpose() +
                     n12 * (wi * wj.transpose() + wj * wi.transpose());
    }

    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > kDivergenceBound) {
      throw ConvergenceError("constrained_mle: iterates diverge, the MLE does not exist for this support",
                             SymMatrix(p), std::numeric_limits<double>::infinity(), iter);
    }
    try {
      w = invert_spd(theta);
    } catch (const DefinitenessError&) {
      throw ConvergenceError("constrained_mle: iterate lost positive definiteness", SymMatrix(p),
                             std::numeric_limits<double>::infinity(), iter);
    }
    residual = gradient_residual(w, s, free_set);
    if (residual <= tol) {
      ConstrainedMleSolution out{SymMatrix::from_dense(theta, 0.0), free_set, iter, residual};
      return out;
    }
  }
  throw ConvergenceError("constrained_mle: no convergence within " + std::to_string(max_iter) + " sweeps",
                         SymMatrix::from_dense(theta, 0.0), residual, max_iter);
}

ConstrainedMleSolution post_selection_mle(const SymMatrix& sigma_hat, const EdgeSet& glasso_support, double tol,
                                          int max_iter) {
  return constrained_mle(sigma_hat, glasso_support.unite(EdgeSet::diagonal(sigma_hat.dim())), tol, max_iter);
}

Eigen::MatrixXd constrained_fisher_information(const SymMatrix& theta, const EdgeSet& support) {
  if (support.dim() != theta.dim()) throw InputError("constrained_fisher_information: dimension mismatch");
  return fisher_from_sigma(invert_spd(theta.dense()), free_parameters(support));
}

SymMatrix mle_variances(const SymMatrix& theta, const EdgeSet& support) {
  const auto params = free_parameters(support);
  const MatrixXd cov = invert_spd(constrained_fisher_information(theta, support));
  SymMatrix out(theta.dim());
  for (std::size_t a = 0; a < params.size(); ++a) {
    const auto e = static_cast<Eigen::Index>(a);
    out.set(params[a].first, params[a].second, cov(e, e));
  }
  return out;
}

double mle_variance(const SymMatrix& theta, const EdgeSet& support, Index i, Index j) {
  if (i >= theta.dim() || j >= theta.dim()) throw InputError("mle_variance: index out of range");
  if (i != j && !support.contains(i, j)) throw DomainError("mle_variance: pair is not a free parameter of the support");
  return mle_variances(theta, support)(i, j);
}

SymMatrix inverse_sample_covariance(const SymMatrix& sigma_hat) { return invert_spd(sigma_hat); }

}  // namespace dsglasso
