#pragma once

// Experiment config files (JSON, schema_version 1) and report serialization.
//
// {
//   "schema_version": 1,
//   "name": "coverage_s1",
//   "experiment": "coverage" | "normality" | "scaling",
//   "model": {"kind": "chain", "p": 80, "rho": 0.3},
//   "n": 250, "replicates": 50, "alpha": 0.05,
//   "lambda_rule": "sqrt_logp_over_n" | {"fixed": 0.1},
//   "methods": ["desparsified", "oracle_mle", "post_selection_mle", "sample_cov"],
//   "seed": 1,
//   "entries": [[1,1],[1,2]],          (normality, 1-based)
//   "p_grid": [100, 200]               (scaling)
// }
// Unknown keys are rejected.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsglasso/diagnostics.hpp"
#include "dsglasso/experiments.hpp"

namespace dsglasso {

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind { kCoverage, kNormality, kScaling };

struct ExperimentFile {
  std::string name;
  ExperimentKind kind = ExperimentKind::kCoverage;
  ExperimentConfig config;
  std::vector<std::pair<Index, Index>> entries;  // 0-based
  std::vector<Index> p_grid;
};

// Throws InputError with a schema message on any violation.
ExperimentFile parse_experiment(const nlohmann::json& j);
ExperimentFile load_experiment_file(const std::string& path);
nlohmann::json to_json(const ExperimentFile& file);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CoverageReport& report);
nlohmann::json to_json(const NormalityReport& report);
nlohmann::json scaling_to_json(const std::vector<ScalingRow>& rows);

// Method rows in the layout of the coverage tables, full precision:
//   method,avgcov_S,avglength_S,avgcov_Sc,avglength_Sc   ("--" where n/a)
void write_coverage_csv(std::ostream& out, const CoverageReport& report);
// p,avgcov_S,avglength_S,avgcov_Sc,avglength_Sc
void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows);
// replicate,stat_<i>_<j>,...
void write_statistics_csv(std::ostream& out, const NormalityReport& report);
// bin_left,bin_right,count
void write_histogram_csv(std::ostream& out, const Histogram& histogram);

// Fixed-width table rounded to 3 decimals.
void print_coverage_table(std::ostream& out, const CoverageReport& report);
void print_scaling_table(std::ostream& out, const std::vector<ScalingRow>& rows);

}  // namespace dsglasso
