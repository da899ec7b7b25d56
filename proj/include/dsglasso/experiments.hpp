#pragma once

// Monte Carlo harness: coverage tables, interval lengths, normality of the
// standardized statistics, dimension scaling and the real-data pipeline.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsglasso/core.hpp"
#include "dsglasso/glasso.hpp"
#include "dsglasso/inference.hpp"
#include "dsglasso/models.hpp"

namespace dsglasso {

enum class Method { kDesparsified, kOracleMle, kPostSelectionMle, kSampleCov };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct LambdaRule {
  enum class Kind { kSqrtLogPOverN, kFixed };
  Kind kind = Kind::kSqrtLogPOverN;
  double value = 0.0;

  double resolve(Index p, Index n) const;
  bool operator==(const LambdaRule&) const = default;
};

struct ExperimentConfig {
  ModelSpec model;
  Index n = 0;
  Index replicates = 50;
  double alpha = 0.05;
  LambdaRule lambda_rule;
  std::vector<Method> methods{Method::kDesparsified};
  std::uint64_t seed = 1;
  // 0 means one worker per available hardware thread.
  unsigned threads = 0;
  double glasso_tol = 1e-7;
  double kkt_tol = 1e-6;
  int glasso_max_iter = 10000;
  bool penalize_diagonal = false;
  double mle_tol = 1e-8;
  int mle_max_iter = 10000;

  // Throws InputError when the configuration is inconsistent.
  void validate() const;
};

struct MethodCoverage {
  Method method = Method::kDesparsified;
  bool available = true;
  std::string unavailable_reason;
  Index attempts = 0;
  Index failures = 0;
  // More than 5% of replicates failed.
  bool invalid = false;

  double avgcov_s = 0.0;
  double avglength_s = 0.0;
  std::optional<double> avgcov_sc;
  std::optional<double> avglength_sc;

  // Per-entry empirical coverage alpha_hat_ij and the number of replicates it
  // averages over. Oracle MLE entries exist only on S. For the post-selection
  // MLE an entry outside the selected set gets the degenerate interval [0, 0],
  // so a true edge that was not selected counts as a miss.
  SymMatrix coverage;
  SymMatrix denominators;

  // Post-selection MLE only: averages over S of the coverage and length
  // conditional on the entry being selected.
  std::optional<double> avgcov_selected_s;
  std::optional<double> avglength_selected_s;

  // Sample covariance only: largest condition number of Sigma_hat seen.
  std::optional<double> max_condition_number;
};

struct CoverageReport {
  ExperimentConfig config;
  double lambda = 0.0;
  std::vector<MethodCoverage> methods;
  Index glasso_failures = 0;
  double max_kkt_residual = 0.0;
  double runtime_seconds = 0.0;

  const MethodCoverage* find(Method method) const;
};

CoverageReport run_coverage(const ExperimentConfig& config);

struct Histogram {
  double lo = -4.0;
  double hi = 4.0;
  std::vector<Index> counts;  // equal-width bins over [lo, hi]
  Index below = 0;
  Index above = 0;

  double bin_left(std::size_t b) const;
  double bin_right(std::size_t b) const;
};

Histogram make_histogram(const std::vector<double>& values, std::size_t bins = 30, double lo = -4.0, double hi = 4.0);

// sup_x |F_n(x) - Phi(x)|.
double ks_distance_normal(std::vector<double> values);

struct EntryNormality {
  Index i = 0;
  Index j = 0;
  std::vector<double> statistics;  // replicate order
  Histogram histogram;
  double ks_distance = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

struct NormalityReport {
  ExperimentConfig config;
  double lambda = 0.0;
  std::vector<EntryNormality> entries;
  Index glasso_failures = 0;
  double max_kkt_residual = 0.0;
  double runtime_seconds = 0.0;
};

// entries are 0-based pairs.
NormalityReport run_normality(const ExperimentConfig& config, const std::vector<std::pair<Index, Index>>& entries);

struct ScalingRow {
  Index p = 0;
  CoverageReport report;  // de-sparsified method only
};

std::vector<ScalingRow> run_scaling_table(const std::vector<Index>& p_grid, const ExperimentConfig& base);

struct PipelineResult {
  std::vector<Index> selected_columns;  // original column indices, by decreasing variance
  std::vector<Index> split_rows;        // rows used for the variance estimates
  Index n_used = 0;
  double lambda = 0.0;
  GlassoSolution glasso;
  EdgeSet edges;
  IntervalTable intervals;
};

// Keep the top_k columns by variance, estimate variances on split_count
// random rows, scale the remaining rows by them (optionally centering with the
// split means), estimate with lambda = sqrt(log p / n), de-sparsify and
// threshold at family level alpha.
PipelineResult real_data_pipeline(const DataMatrix& data, Index split_count, Index top_k, double alpha,
                                  SeededRng& rng, bool center = false);

}  // namespace dsglasso
