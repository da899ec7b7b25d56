#pragma once

// Graphical Lasso:
//   argmin_{Theta > 0} trace(Theta Sigma_hat) - log det Theta + lambda * sum_{i != j} |Theta_ij|
// solved by block coordinate descent over columns of W = Theta^{-1}, each
// column subproblem being a lasso solved by cyclic soft-thresholding.

#include <vector>

#include "dsglasso/core.hpp"

namespace dsglasso {

enum class GlassoInit {
  kSampleCovariance,  // W0 = Sigma_hat
  kDiagonal,          // W0 = diag(Sigma_hat), i.e. Theta0 = diag(Sigma_hat)^{-1}
};

struct GlassoConfig {
  double lambda = 0.0;
  int max_iter = 10000;  // outer sweeps
  double tol = 1e-7;     // sweep change of W, relative to mean |offdiag(Sigma_hat)|
  double kkt_tol = 1e-6;
  GlassoInit init = GlassoInit::kSampleCovariance;
  bool record_objective = false;
  // Also penalize |Theta_ii| (the convention of some reference implementations).
  bool penalize_diagonal = false;
};

struct GlassoSolution {
  SymMatrix theta;        // Theta_hat
  SymMatrix sigma_model;  // W as maintained by the solver
  int iterations = 0;
  double kkt_residual = 0.0;
  double dual_gap = 0.0;
  double lambda = 0.0;
  // Primal objective after each sweep (only when record_objective is set).
  std::vector<double> objective_trace;
};

// Throws InputError for a non-positive diagonal or bad config, and
// ConvergenceError (carrying the last iterate) when max_iter is reached.
GlassoSolution graphical_lasso(const SymMatrix& sigma_hat, const GlassoConfig& config);

// Largest violation of Sigma_hat - Theta^{-1} + lambda Z = 0 over all entries.
double kkt_check(const SymMatrix& sigma_hat, const SymMatrix& theta, double lambda, bool penalize_diagonal = false);

double glasso_objective(const SymMatrix& sigma_hat, const SymMatrix& theta, double lambda,
                        bool penalize_diagonal = false);

// sqrt(log p / n).
double default_lambda(Index p, Index n);

}  // namespace dsglasso
