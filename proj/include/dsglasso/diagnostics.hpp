#pragma once

// Structural quantities of a true model (kappa_Sigma, kappa_Gamma,
// irrepresentability) and empirical decompositions of the de-sparsified
// estimator on synthetic truths.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "dsglasso/core.hpp"
#include "dsglasso/models.hpp"

namespace dsglasso {

// |||Sigma*|||_inf.
double kappa_sigma(const SymMatrix& sigma_star);

// |||(Gamma*_SS)^{-1}|||_inf with Gamma* = Sigma* (x) Sigma*, Sigma* = Theta*^{-1}.
// Throws SingularityError when Gamma*_SS is numerically singular.
double kappa_gamma(const SymMatrix& theta_star, const EdgeSet& support);

// 1 - max_{e in S^c} || Gamma*_eS (Gamma*_SS)^{-1} ||_1 (may be <= 0).
double irrepresentability_alpha(const SymMatrix& theta_star, const EdgeSet& support);

struct RemainderDecomposition {
  SymMatrix leading;  // -Theta* W Theta*
  Eigen::MatrixXd rem;
  // max |(T_hat - Theta*) - (leading + rem)|
  double identity_error = 0.0;
};

// With W = Sigma_hat - Sigma*:
//   rem = -(Theta_hat - Theta*) W Theta* - (Theta_hat Sigma_hat - I)(Theta_hat - Theta*).
// rem is returned unsymmetrized; it is not symmetric in general.
RemainderDecomposition remainder_decomposition(const SymMatrix& theta_hat, const SymMatrix& theta_star,
                                               const SymMatrix& sigma_hat, const SymMatrix& sigma_star);

struct DeviationRow {
  Index n = 0;
  double quantile_95 = 0.0;
  std::vector<double> sup_deviations;  // ||Sigma_hat - Sigma*||_inf per replicate
};

// Replicate r draws from stream r of `seed`.
std::vector<DeviationRow> deviation_curve(const ModelSpec& spec, const std::vector<Index>& n_grid, Index replicates,
                                          std::uint64_t seed);

// (8/alpha) * 8(1+12K^2) max_i Sigma*_ii sqrt(2 log(4 p^gamma) / n).
double theoretical_lambda(const SymMatrix& sigma_star, double alpha, Index n, Index p, double gamma, double k = 1.0);

// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> values, double q);

struct StructureReport {
  double kappa_sigma = 0.0;
  double kappa_gamma = 0.0;
  double alpha_irrep = 0.0;
  Index d = 0;  // max row cardinality of S, diagonal included
  Index s = 0;  // |S|, ordered pairs
  Index p = 0;
  // Only when alpha_irrep > 0.
  bool has_lambda_theory = false;
  double lambda_theory = 0.0;
  Index n = 0;
  double gamma = 0.0;
  double k = 0.0;
};

StructureReport structure_report(const TrueModel& model, Index n, double gamma = 2.5, double k = 1.0);

nlohmann::json to_json(const StructureReport& report);
// Fixed-order human-readable block.
void print_report(std::ostream& out, const StructureReport& report);

}  // namespace dsglasso
