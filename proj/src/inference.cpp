#include "dsglasso/inference.hpp"

#include <cmath>
#include <ostream>

#include "dsglasso/csv.hpp"

namespace dsglasso {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

}  // namespace

DesparsifiedEstimate desparsify(const SymMatrix& theta_hat, const SymMatrix& sigma_hat) {
  if (theta_hat.dim() != sigma_hat.dim()) throw InputError("desparsify: dimension mismatch");
  const Eigen::MatrixXd theta = theta_hat.dense();
  const Eigen::MatrixXd sigma = sigma_hat.dense();
  const Eigen::MatrixXd t = 2.0 * theta - theta * sigma * theta;
  // Theta Sigma Theta is symmetric in exact arithmetic; floating-point
  // asymmetry is removed by averaging.
  return {SymMatrix::from_dense(t, 1e-6), theta_hat, sigma_hat};
}

double plugin_variance(const SymMatrix& theta_hat, Index i, Index j) {
  const double tii = theta_hat(i, i);
  const double tjj = theta_hat(j, j);
  if (!(tii > 0.0) || !(tjj > 0.0)) throw InputError("plugin_variance: diagonal entries must be positive");
  const double tij = theta_hat(i, j);
  return tii * tjj + tij * tij;
}

SymMatrix plugin_variances(const SymMatrix& theta_hat) {
  SymMatrix out(theta_hat.dim());
  for (Index i = 0; i < theta_hat.dim(); ++i)
    for (Index j = i; j < theta_hat.dim(); ++j) out.set(i, j, plugin_variance(theta_hat, i, j));
  return out;
}

IntervalTable::IntervalTable(SymMatrix center, SymMatrix variance, Index n, double alpha)
    : center_(std::move(center)), variance_(std::move(variance)), n_(n), alpha_(alpha) {
  check_alpha(alpha);
  if (n < 2) throw InputError("confidence intervals need n >= 2");
  if (center_.dim() != variance_.dim()) throw InputError("IntervalTable: dimension mismatch");
  z_ = std_normal_quantile(1.0 - alpha / 2.0);
}

void IntervalTable::write_csv(std::ostream& out) const {
  out << "i,j,t_hat,sigma_hat,lo,hi\n";
  for (Index i = 0; i < dim(); ++i) {
    for (Index j = i; j < dim(); ++j) {
      out << (i + 1) << ',' << (j + 1) << ',' << csv::format_double(center(i, j)) << ','
          << csv::format_double(sigma(i, j)) << ',' << csv::format_double(lo(i, j)) << ','
          << csv::format_double(hi(i, j)) << '\n';
    }
  }
}

nlohmann::json IntervalTable::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (Index i = 0; i < dim(); ++i) {
    for (Index j = i; j < dim(); ++j) {
      entries.push_back({{"i", i + 1},
                         {"j", j + 1},
                         {"t_hat", center(i, j)},
                         {"sigma_hat", sigma(i, j)},
                         {"lo", lo(i, j)},
                         {"hi", hi(i, j)}});
    }
  }
  return {{"level", level()}, {"alpha", alpha_}, {"n", n_}, {"p", dim()}, {"quantile", z_}, {"intervals", entries}};
}

IntervalTable confidence_intervals(const DesparsifiedEstimate& est, Index n, double alpha) {
  check_alpha(alpha);
  return IntervalTable(est.t_hat, plugin_variances(est.theta_hat), n, alpha);
}

EdgeSet threshold_edges(const DesparsifiedEstimate& est, Index n, double alpha) {
  check_alpha(alpha);
  const Index p = est.t_hat.dim();
  if (p < 2) throw InputError("threshold_edges: need p >= 2");
  if (n < 1) throw InputError("threshold_edges: need n >= 1");
  const double z = std_normal_quantile(1.0 - alpha / static_cast<double>(p * (p - 1)));
  const double root_n = std::sqrt(static_cast<double>(n));
  EdgeSet edges(p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      const double cut = z * std::sqrt(plugin_variance(est.theta_hat, i, j)) / root_n;
      if (std::abs(est.t_hat(i, j)) > cut) edges.insert(i, j);
    }
  }
  return edges;
}

double standardized_statistic(const DesparsifiedEstimate& est, const SymMatrix& theta_star, Index n, Index i,
                              Index j) {
  if (theta_star.dim() != est.t_hat.dim()) throw InputError("standardized_statistic: dimension mismatch");
  if (i >= theta_star.dim() || j >= theta_star.dim()) throw InputError("standardized_statistic: index out of range");
  return std::sqrt(static_cast<double>(n)) * (est.t_hat(i, j) - theta_star(i, j)) /
         std::sqrt(plugin_variance(est.theta_hat, i, j));
}

}  // namespace dsglasso
