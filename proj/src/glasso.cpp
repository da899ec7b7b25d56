#include "dsglasso/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dsglasso {

namespace {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double mean_abs_offdiag(const Eigen::MatrixXd& s) {
  const Eigen::Index p = s.rows();
  if (p < 2) return 0.0;
  const double total = s.cwiseAbs().sum() - s.diagonal().cwiseAbs().sum();
  return total / static_cast<double>(p * (p - 1));
}

// Cyclic coordinate descent for
//   min_beta 1/2 beta' W11 beta - beta' s12 + lambda |beta|_1
// where W11 is W with row/column j removed. beta is stored in column j of
// `b` (entry j unused and kept at 0); `wb` receives W11 beta.
void solve_column_lasso(const Eigen::MatrixXd& w, const Eigen::MatrixXd& s, double lambda, Eigen::Index j,
                        double inner_tol, Eigen::MatrixXd& b, Eigen::VectorXd& wb) {
  const Eigen::Index p = w.rows();
  auto beta = b.col(j);
  wb.setZero();
  for (Eigen::Index k = 0; k < p; ++k)
    if (beta(k) != 0.0) wb.noalias() += beta(k) * w.col(k);

  auto update = [&](Eigen::Index k) {
    const double wkk = w(k, k);
    const double old = beta(k);
    const double g = s(k, j) - wb(k) + wkk * old;
    const double next = soft_threshold(g, lambda) / wkk;
    if (next == old) return 0.0;
    const double d = next - old;
    beta(k) = next;
    wb.noalias() += d * w.col(k);
    return std::abs(d) * wkk;
  };

  constexpr int kMaxPasses = 100000;
  bool full_pass = true;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    double change = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (k == j) continue;
      if (!full_pass && beta(k) == 0.0) continue;
      change = std::max(change, update(k));
    }
    if (change < inner_tol) {
      if (full_pass) break;
      full_pass = true;
    } else {
      full_pass = false;
    }
  }
}

// Theta from W and the column coefficients: theta_jj = 1/(w_jj - w12' beta),
// theta_12 = -beta theta_jj. Returns false if some theta_jj is not positive.
bool assemble_theta(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b, Eigen::MatrixXd& theta) {
  const Eigen::Index p = w.rows();
  theta.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double schur = w(j, j) - w.col(j).dot(b.col(j));
    if (!(schur > 0.0) || !std::isfinite(schur)) return false;
    const double tjj = 1.0 / schur;
    for (Eigen::Index i = 0; i < p; ++i) theta(i, j) = b(i, j) == 0.0 ? 0.0 : -tjj * b(i, j);
    theta(j, j) = tjj;
  }
  return true;
}

double objective_dense(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta, double lambda, bool diag_penalty) {
  const Eigen::MatrixXd l = cholesky(theta);
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double trace = (theta.array() * s.array()).sum();
  const double penalty = theta.cwiseAbs().sum() - (diag_penalty ? 0.0 : theta.diagonal().cwiseAbs().sum());
  return trace - log_det + lambda * penalty;
}

double kkt_dense(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta, double lambda, bool diag_penalty) {
  const Eigen::MatrixXd winv = invert_spd(theta);
  const Eigen::Index p = s.rows();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      const double grad = s(i, j) - winv(i, j);
      double v;
      if (i == j) {
        v = std::abs(diag_penalty ? grad + lambda : grad);
      } else if (theta(i, j) != 0.0) {
        v = std::abs(grad + lambda * (theta(i, j) > 0.0 ? 1.0 : -1.0));
      } else {
        v = std::max(0.0, std::abs(grad) - lambda);
      }
      worst = std::max(worst, v);
    }
  }
  return worst;
}

}  // namespace

double default_lambda(dsglasso::Index p, dsglasso::Index n) {
  if (p < 1 || n < 1) throw InputError("default_lambda: p and n must be positive");
  return std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double kkt_check(const SymMatrix& sigma_hat, const SymMatrix& theta, double lambda, bool penalize_diagonal) {
  if (sigma_hat.dim() != theta.dim()) throw InputError("kkt_check: dimension mismatch");
  return kkt_dense(sigma_hat.dense(), theta.dense(), lambda, penalize_diagonal);
}

double glasso_objective(const SymMatrix& sigma_hat, const SymMatrix& theta, double lambda, bool penalize_diagonal) {
  if (sigma_hat.dim() != theta.dim()) throw InputError("glasso_objective: dimension mismatch");
  return objective_dense(sigma_hat.dense(), theta.dense(), lambda, penalize_diagonal);
}

GlassoSolution graphical_lasso(const SymMatrix& sigma_hat, const GlassoConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) throw InputError("graphical_lasso: lambda must be >= 0");
  if (!(config.tol > 0.0) || !(config.kkt_tol > 0.0)) throw InputError("graphical_lasso: tolerances must be > 0");
  if (config.max_iter < 1) throw InputError("graphical_lasso: max_iter must be >= 1");

  const Eigen::MatrixXd s = sigma_hat.dense();
  const Eigen::Index p = s.rows();
  for (Eigen::Index i = 0; i < p; ++i)
    if (!(s(i, i) > 0.0)) throw InputError("graphical_lasso: sample covariance needs a strictly positive diagonal");

  const double lambda = config.lambda;
  GlassoSolution out;
  out.lambda = lambda;

  Eigen::MatrixXd w = config.init == GlassoInit::kDiagonal ? Eigen::MatrixXd(s.diagonal().asDiagonal()) : s;
  // The diagonal of W is fixed by the diagonal KKT condition.
  if (config.penalize_diagonal) w.diagonal().array() += lambda;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd theta;
  Eigen::VectorXd wb(p);

  const double scale = mean_abs_offdiag(s);
  double threshold = config.tol * (scale > 0.0 ? scale : 1.0);
  double inner_tol = 0.1 * threshold;

  double last_residual = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const Eigen::MatrixXd w_old = w;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (p == 1) break;
      solve_column_lasso(w, s, lambda, j, inner_tol, b, wb);
      const double wjj = w(j, j);
      w.col(j) = wb;
      w.row(j) = wb.transpose();
      w(j, j) = wjj;
    }
    const double change = (w - w_old).cwiseAbs().maxCoeff();

    const bool assembled = assemble_theta(w, b, theta);
    if (config.record_objective) {
      double obj = std::numeric_limits<double>::infinity();
      if (assembled) {
        try {
          obj = objective_dense(s, 0.5 * (theta + theta.transpose()), lambda, config.penalize_diagonal);
        } catch (const DefinitenessError&) {
        }
      }
      out.objective_trace.push_back(obj);
    }
    if (change > threshold || !assembled) continue;

    const double asymmetry = (theta - theta.transpose()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd sym = 0.5 * (theta + theta.transpose());
    double residual = std::numeric_limits<double>::infinity();
    try {
      residual = kkt_dense(s, sym, lambda, config.penalize_diagonal);
    } catch (const DefinitenessError&) {
    }
    last_residual = residual;
    if (residual <= config.kkt_tol && asymmetry <= 1e-8) {
      out.theta = SymMatrix::from_dense(sym, 0.0);
      out.sigma_model = SymMatrix::from_dense(0.5 * (w + w.transpose()), 0.0);
      out.iterations = iter;
      out.kkt_residual = residual;
      double gap = std::numeric_limits<double>::quiet_NaN();
      try {
        const double dual = 2.0 * cholesky(w).diagonal().array().log().sum() + static_cast<double>(p);
        gap = objective_dense(s, sym, lambda, config.penalize_diagonal) - dual;
      } catch (const DefinitenessError&) {
      }
      out.dual_gap = gap;
      return out;
    }
    // Sweep-change test passed but the certificate did not: tighten and go on.
    const double floor = 1e-15 * (scale > 0.0 ? scale : 1.0);
    threshold = std::max(0.1 * threshold, floor);
    inner_tol = std::max(0.1 * inner_tol, 0.1 * floor);
  }

  SymMatrix last(static_cast<dsglasso::Index>(p));
  if (assemble_theta(w, b, theta)) {
    const Eigen::MatrixXd sym = 0.5 * (theta + theta.transpose());
    if (sym.allFinite()) last = SymMatrix::from_dense(sym, 0.0);
  }
  throw ConvergenceError("graphical_lasso: no convergence within " + std::to_string(config.max_iter) + " sweeps",
                         std::move(last), last_residual, config.max_iter);
}

}  // namespace dsglasso
