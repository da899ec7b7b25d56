#include "dsglasso/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "dsglasso/inference.hpp"

namespace dsglasso {

namespace {

// (Gamma*_SS)^{-1} Gamma*_{S T} via partial-pivoting LU; Gamma*_SS is
// symmetric but may be badly conditioned.
class GammaSolver {
 public:
  GammaSolver(const SymMatrix& theta_star, const EdgeSet& support)
      : gamma_(invert_spd(theta_star)), support_(support.pairs()) {
    if (support.dim() != theta_star.dim()) throw InputError("diagnostics: dimension mismatch");
    if (support_.empty()) throw InputError("diagnostics: empty support");
    const Eigen::MatrixXd gss = gamma_.block(support_, support_);
    lu_.compute(gss);
    const double rcond = lu_.rcond();
    if (!(rcond > 1e-14)) throw SingularityError("diagnostics: Gamma_SS is numerically singular");
  }

  Eigen::MatrixXd inverse() const {
    const auto s = static_cast<Eigen::Index>(support_.size());
    return lu_.solve(Eigen::MatrixXd::Identity(s, s));
  }

  const HessianView& gamma() const { return gamma_; }
  const std::vector<std::pair<Index, Index>>& support() const { return support_; }
  const Eigen::PartialPivLU<Eigen::MatrixXd>& lu() const { return lu_; }

 private:
  HessianView gamma_;
  std::vector<std::pair<Index, Index>> support_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

double kappa_sigma(const SymMatrix& sigma_star) { return linf_operator_norm(sigma_star); }

double kappa_gamma(const SymMatrix& theta_star, const EdgeSet& support) {
  const GammaSolver solver(theta_star, support);
  return linf_operator_norm(solver.inverse());
}

double irrepresentability_alpha(const SymMatrix& theta_star, const EdgeSet& support) {
  const GammaSolver solver(theta_star, support);
  const auto comp = support.complement();
  if (comp.empty()) return 1.0;
  // Row e of Gamma_{S^c S} Gamma_SS^{-1} is column e of Gamma_SS^{-1} Gamma_{S S^c}
  // (both Gamma_SS and Gamma are symmetric). Solve in chunks to bound memory.
  constexpr std::size_t kChunk = 512;
  double worst = 0.0;
  for (std::size_t start = 0; start < comp.size(); start += kChunk) {
    const std::size_t stop = std::min(comp.size(), start + kChunk);
    const std::vector<std::pair<Index, Index>> cols(comp.begin() + static_cast<std::ptrdiff_t>(start),
                                                    comp.begin() + static_cast<std::ptrdiff_t>(stop));
    const Eigen::MatrixXd rhs = solver.gamma().block(solver.support(), cols);
    const Eigen::MatrixXd x = solver.lu().solve(rhs);
    worst = std::max(worst, x.cwiseAbs().colwise().sum().maxCoeff());
  }
  return 1.0 - worst;
}

RemainderDecomposition remainder_decomposition(const SymMatrix& theta_hat, const SymMatrix& theta_star,
                                               const SymMatrix& sigma_hat, const SymMatrix& sigma_star) {
  const Index p = theta_hat.dim();
  if (theta_star.dim() != p || sigma_hat.dim() != p || sigma_star.dim() != p)
    throw InputError("remainder_decomposition: dimension mismatch");
  const Eigen::MatrixXd th = theta_hat.dense();
  const Eigen::MatrixXd ts = theta_star.dense();
  const Eigen::MatrixXd sh = sigma_hat.dense();
  const Eigen::MatrixXd w = sh - sigma_star.dense();
  const Eigen::MatrixXd diff = th - ts;
  const auto ep = static_cast<Eigen::Index>(p);

  const Eigen::MatrixXd leading = -ts * w * ts;
  Eigen::MatrixXd rem = -diff * w * ts - (th * sh - Eigen::MatrixXd::Identity(ep, ep)) * diff;

  const Eigen::MatrixXd lhs = desparsify(theta_hat, sigma_hat).t_hat.dense() - ts;
  RemainderDecomposition out{SymMatrix::from_dense(leading, 1e-8), std::move(rem), 0.0};
  out.identity_error = (lhs - (out.leading.dense() + out.rem)).cwiseAbs().maxCoeff();
  return out;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("empirical_quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("empirical_quantile: q must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(values.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<DeviationRow> deviation_curve(const ModelSpec& spec, const std::vector<Index>& n_grid, Index replicates,
                                          std::uint64_t seed) {
  if (n_grid.empty()) throw InputError("deviation_curve: empty n grid");
  if (replicates < 1) throw InputError("deviation_curve: need at least one replicate");
  const TrueModel model = make_precision(spec);
  const Eigen::MatrixXd factor = cholesky(model.sigma);
  const Eigen::MatrixXd sigma_star = model.sigma.dense();
  std::vector<DeviationRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    DeviationRow row;
    row.n = n_grid[g];
    for (Index r = 0; r < replicates; ++r) {
      // Streams are offset per grid point so that different n use fresh draws.
      SeededRng rng(seed, static_cast<std::uint64_t>(g) * replicates + r);
      const DataMatrix x = sample_gaussian_with_factor(factor, row.n, rng);
      row.sup_deviations.push_back(sup_norm(sample_covariance(x).dense() - sigma_star));
    }
    row.quantile_95 = empirical_quantile(row.sup_deviations, 0.95);
    rows.push_back(std::move(row));
  }
  return rows;
}

double theoretical_lambda(const SymMatrix& sigma_star, double alpha, Index n, Index p, double gamma, double k) {
  if (!(gamma > 2.0)) throw DomainError("theoretical_lambda: gamma must exceed 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("theoretical_lambda: alpha must lie in (0,1]");
  if (!(k > 0.0)) throw DomainError("theoretical_lambda: K must be positive");
  if (n < 1 || p < 1) throw DomainError("theoretical_lambda: n and p must be positive");
  double max_diag = 0.0;
  for (Index i = 0; i < sigma_star.dim(); ++i) max_diag = std::max(max_diag, sigma_star(i, i));
  const double log_term = std::log(4.0) + gamma * std::log(static_cast<double>(p));
  const double delta = 8.0 * (1.0 + 12.0 * k * k) * max_diag * std::sqrt(2.0 * log_term / static_cast<double>(n));
  return 8.0 / alpha * delta;
}

StructureReport structure_report(const TrueModel& model, Index n, double gamma, double k) {
  StructureReport r;
  r.p = model.theta.dim();
  r.kappa_sigma = kappa_sigma(model.sigma);
  r.kappa_gamma = kappa_gamma(model.theta, model.support);
  r.alpha_irrep = irrepresentability_alpha(model.theta, model.support);
  r.d = model.support.max_row_cardinality();
  r.s = model.support.size();
  r.n = n;
  r.gamma = gamma;
  r.k = k;
  if (r.alpha_irrep > 0.0 && n > 0) {
    r.has_lambda_theory = true;
    r.lambda_theory = theoretical_lambda(model.sigma, std::min(1.0, r.alpha_irrep), n, r.p, gamma, k);
  }
  return r;
}

nlohmann::json to_json(const StructureReport& r) {
  nlohmann::json j = {{"p", r.p},
                      {"s", r.s},
                      {"d", r.d},
                      {"kappa_sigma", r.kappa_sigma},
                      {"kappa_gamma", r.kappa_gamma},
                      {"alpha_irrep", r.alpha_irrep},
                      {"n", r.n},
                      {"gamma", r.gamma},
                      {"K", r.k}};
  j["lambda_theory"] = r.has_lambda_theory ? nlohmann::json(r.lambda_theory) : nlohmann::json(nullptr);
  return j;
}

void print_report(std::ostream& out, const StructureReport& r) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(10);
  out << "p             " << r.p << '\n'
      << "s             " << r.s << '\n'
      << "d             " << r.d << "  (row cardinality, diagonal included)\n"
      << "kappa_sigma   " << r.kappa_sigma << '\n'
      << "kappa_gamma   " << r.kappa_gamma << '\n'
      << "alpha_irrep   " << r.alpha_irrep << (r.alpha_irrep > 0.0 ? "" : "  (irrepresentability fails)") << '\n';
  if (r.has_lambda_theory) {
    out << "lambda_theory " << r.lambda_theory << "  (n=" << r.n << ", gamma=" << r.gamma << ", K=" << r.k << ")\n";
  } else {
    out << "lambda_theory n/a\n";
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace dsglasso
