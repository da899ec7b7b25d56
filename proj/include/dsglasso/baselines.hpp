#pragma once

// Comparison estimators: support-constrained Gaussian MLE (oracle and
// post-selection) and the inverse sample covariance.

#include "dsglasso/core.hpp"

namespace dsglasso {

struct ConstrainedMleSolution {
  SymMatrix theta;
  EdgeSet support;
  int iterations = 0;
  double grad_residual = 0.0;
};

// Maximizes log det Theta - trace(Theta Sigma_hat) subject to Theta_ij = 0
// off the support, by cyclic coordinate ascent with a Newton step per
// coordinate. Diagonal pairs are always free. Throws ConvergenceError if the
// gradient residual on the support does not fall below tol, including the
// case where the iterates diverge because the MLE does not exist.
ConstrainedMleSolution constrained_mle(const SymMatrix& sigma_hat, const EdgeSet& support, double tol = 1e-8,
                                       int max_iter = 10000);

// Refit on the nonzero pattern of a graphical Lasso estimate plus the diagonal.
ConstrainedMleSolution post_selection_mle(const SymMatrix& sigma_hat, const EdgeSet& glasso_support,
                                          double tol = 1e-8, int max_iter = 10000);

// Asymptotic variance of sqrt(n)(Theta_hat_ij - Theta*_ij) for the
// support-constrained MLE: diagonal of the inverse Fisher information over the
// free parameters {Theta_kl : (k,l) in support, k <= l}.
double mle_variance(const SymMatrix& theta, const EdgeSet& support, Index i, Index j);
// Same for every pair of the support at once; zero off the support.
SymMatrix mle_variances(const SymMatrix& theta, const EdgeSet& support);
// Fisher information over the free parameters, in the order of
// free_parameters(support).
Eigen::MatrixXd constrained_fisher_information(const SymMatrix& theta, const EdgeSet& support);
std::vector<std::pair<Index, Index>> free_parameters(const EdgeSet& support);

// Sigma_hat^{-1}; throws DefinitenessError when Sigma_hat is singular.
SymMatrix inverse_sample_covariance(const SymMatrix& sigma_hat);

}  // namespace dsglasso
