#include "dsglasso/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dsglasso/csv.hpp"

namespace dsglasso {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) { throw InputError("config schema error: " + what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) schema_error(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.contains(key)) schema_error("unknown key '" + key + "' in " + where);
}

const json& require(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) schema_error("missing key '" + std::string(key) + "' in " + where);
  return *it;
}

double get_number(const json& v, const std::string& what) {
  if (!v.is_number()) schema_error(what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) schema_error(what + " must be finite");
  return x;
}

Index get_count(const json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) schema_error(what + " must be a non-negative integer");
  return static_cast<Index>(v.get<long long>());
}

std::string get_string(const json& v, const std::string& what) {
  if (!v.is_string()) schema_error(what + " must be a string");
  return v.get<std::string>();
}

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kCoverage: return "coverage";
    case ExperimentKind::kNormality: return "normality";
    case ExperimentKind::kScaling: return "scaling";
  }
  return "unknown";
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json sym_to_json(const SymMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = to_json(c.model);
  j["n"] = c.n;
  j["replicates"] = c.replicates;
  j["alpha"] = c.alpha;
  if (c.lambda_rule.kind == LambdaRule::Kind::kFixed)
    j["lambda_rule"] = json{{"fixed", c.lambda_rule.value}};
  else
    j["lambda_rule"] = "sqrt_logp_over_n";
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  j["methods"] = std::move(methods);
  j["seed"] = c.seed;
  j["solver"] = json{{"glasso_tol", c.glasso_tol},
                     {"kkt_tol", c.kkt_tol},
                     {"glasso_max_iter", c.glasso_max_iter},
                     {"penalize_diagonal", c.penalize_diagonal},
                     {"mle_tol", c.mle_tol},
                     {"mle_max_iter", c.mle_max_iter}};
  return j;
}

std::string cell(const std::optional<double>& x) { return x ? csv::format_double(*x) : std::string("--"); }

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string cell3(const std::optional<double>& x) { return x ? fixed3(*x) : std::string("--"); }

std::string method_label(Method m) {
  switch (m) {
    case Method::kDesparsified: return "De-sparsified";
    case Method::kOracleMle: return "MLE (oracle S)";
    case Method::kPostSelectionMle: return "MLE (selected S)";
    case Method::kSampleCov: return "Sample covariance";
  }
  return "?";
}

}  // namespace

json to_json(const ModelSpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["p"] = spec.p;
  switch (spec.kind) {
    case ModelKind::kChain:
    case ModelKind::kToeplitzCov:
      j["rho"] = spec.rho;
      break;
    case ModelKind::kBlockDiag:
      j["block_sizes"] = spec.block_sizes;
      j["block_value"] = spec.block_value;
      break;
    case ModelKind::kDiagonal:
      if (!spec.diagonal.empty()) j["diagonal"] = spec.diagonal;
      break;
  }
  return j;
}

ModelSpec model_from_json(const json& j) {
  check_keys(j, "model", {"kind", "p", "rho", "block_sizes", "block_value", "diagonal"});
  ModelSpec spec;
  try {
    spec.kind = model_kind_from_string(get_string(require(j, "kind", "model"), "model.kind"));
  } catch (const InputError& e) {
    schema_error(e.what());
  }
  spec.p = get_count(require(j, "p", "model"), "model.p");
  if (spec.p < 1) schema_error("model.p must be positive");
  if (const auto it = j.find("rho"); it != j.end()) spec.rho = get_number(*it, "model.rho");
  if (const auto it = j.find("block_value"); it != j.end()) spec.block_value = get_number(*it, "model.block_value");
  if (const auto it = j.find("block_sizes"); it != j.end()) {
    if (!it->is_array()) schema_error("model.block_sizes must be an array");
    for (const auto& v : *it) spec.block_sizes.push_back(get_count(v, "model.block_sizes[]"));
  }
  if (const auto it = j.find("diagonal"); it != j.end()) {
    if (!it->is_array()) schema_error("model.diagonal must be an array");
    for (const auto& v : *it) spec.diagonal.push_back(get_number(v, "model.diagonal[]"));
  }
  if ((spec.kind == ModelKind::kChain || spec.kind == ModelKind::kToeplitzCov) && !j.contains("rho"))
    schema_error("model.rho is required for " + to_string(spec.kind));
  if (spec.kind == ModelKind::kBlockDiag && (!j.contains("block_sizes") || !j.contains("block_value")))
    schema_error("model.block_sizes and model.block_value are required for block_diag");
  return spec;
}

ExperimentFile parse_experiment(const json& j) {
  check_keys(j, "config", {"schema_version", "name", "experiment", "model", "n", "replicates", "alpha", "lambda_rule",
                           "methods", "seed", "entries", "p_grid", "threads", "solver"});
  const json& version = require(j, "schema_version", "config");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion)
    schema_error("schema_version must be " + std::to_string(kSchemaVersion));

  ExperimentFile file;
  if (const auto it = j.find("name"); it != j.end()) file.name = get_string(*it, "name");
  const std::string kind = get_string(require(j, "experiment", "config"), "experiment");
  if (kind == "coverage")
    file.kind = ExperimentKind::kCoverage;
  else if (kind == "normality")
    file.kind = ExperimentKind::kNormality;
  else if (kind == "scaling")
    file.kind = ExperimentKind::kScaling;
  else
    schema_error("unknown experiment '" + kind + "'");

  ExperimentConfig& c = file.config;
  c.model = model_from_json(require(j, "model", "config"));
  c.n = get_count(require(j, "n", "config"), "n");
  if (const auto it = j.find("replicates"); it != j.end()) c.replicates = get_count(*it, "replicates");
  if (const auto it = j.find("alpha"); it != j.end()) c.alpha = get_number(*it, "alpha");
  if (const auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) schema_error("seed must be a non-negative integer");
    c.seed = it->get<std::uint64_t>();
  }
  if (const auto it = j.find("threads"); it != j.end()) c.threads = static_cast<unsigned>(get_count(*it, "threads"));

  if (const auto it = j.find("lambda_rule"); it != j.end()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "sqrt_logp_over_n") schema_error("unknown lambda_rule '" + it->get<std::string>() + "'");
      c.lambda_rule = {};
    } else {
      check_keys(*it, "lambda_rule", {"fixed"});
      c.lambda_rule.kind = LambdaRule::Kind::kFixed;
      c.lambda_rule.value = get_number(require(*it, "fixed", "lambda_rule"), "lambda_rule.fixed");
    }
  }

  if (const auto it = j.find("methods"); it != j.end()) {
    if (!it->is_array()) schema_error("methods must be an array");
    c.methods.clear();
    for (const auto& v : *it) {
      try {
        c.methods.push_back(method_from_string(get_string(v, "methods[]")));
      } catch (const InputError& e) {
        schema_error(e.what());
      }
    }
  }

  if (const auto it = j.find("solver"); it != j.end()) {
    check_keys(*it, "solver",
               {"glasso_tol", "kkt_tol", "glasso_max_iter", "penalize_diagonal", "mle_tol", "mle_max_iter"});
    if (it->contains("penalize_diagonal")) {
      if (!it->at("penalize_diagonal").is_boolean()) schema_error("solver.penalize_diagonal must be a boolean");
      c.penalize_diagonal = it->at("penalize_diagonal").get<bool>();
    }
    if (it->contains("glasso_tol")) c.glasso_tol = get_number(it->at("glasso_tol"), "solver.glasso_tol");
    if (it->contains("kkt_tol")) c.kkt_tol = get_number(it->at("kkt_tol"), "solver.kkt_tol");
    if (it->contains("mle_tol")) c.mle_tol = get_number(it->at("mle_tol"), "solver.mle_tol");
    if (it->contains("glasso_max_iter"))
      c.glasso_max_iter = static_cast<int>(get_count(it->at("glasso_max_iter"), "solver.glasso_max_iter"));
    if (it->contains("mle_max_iter"))
      c.mle_max_iter = static_cast<int>(get_count(it->at("mle_max_iter"), "solver.mle_max_iter"));
  }

  if (const auto it = j.find("entries"); it != j.end()) {
    if (file.kind != ExperimentKind::kNormality) schema_error("entries is only valid for normality experiments");
    if (!it->is_array()) schema_error("entries must be an array of [i, j] pairs");
    for (const auto& e : *it) {
      if (!e.is_array() || e.size() != 2) schema_error("entries must be an array of [i, j] pairs");
      const Index i = get_count(e[0], "entries[][0]");
      const Index k = get_count(e[1], "entries[][1]");
      if (i < 1 || k < 1 || i > c.model.p || k > c.model.p) schema_error("entries are 1-based and must lie in 1..p");
      file.entries.emplace_back(i - 1, k - 1);
    }
  }
  if (file.kind == ExperimentKind::kNormality && file.entries.empty()) schema_error("normality needs entries");

  if (const auto it = j.find("p_grid"); it != j.end()) {
    if (file.kind != ExperimentKind::kScaling) schema_error("p_grid is only valid for scaling experiments");
    if (!it->is_array() || it->empty()) schema_error("p_grid must be a non-empty array");
    for (const auto& v : *it) {
      const Index p = get_count(v, "p_grid[]");
      if (p < 1) schema_error("p_grid entries must be positive");
      file.p_grid.push_back(p);
    }
  }
  if (file.kind == ExperimentKind::kScaling && file.p_grid.empty()) schema_error("scaling needs p_grid");

  try {
    c.validate();
  } catch (const InputError& e) {
    schema_error(e.what());
  }
  return file;
}

ExperimentFile load_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_experiment(j);
}

json to_json(const ExperimentFile& file) {
  json j = config_to_json(file.config);
  j["schema_version"] = kSchemaVersion;
  if (!file.name.empty()) j["name"] = file.name;
  j["experiment"] = experiment_name(file.kind);
  if (!file.entries.empty()) {
    json entries = json::array();
    for (const auto& [i, k] : file.entries) entries.push_back(json::array({i + 1, k + 1}));
    j["entries"] = std::move(entries);
  }
  if (!file.p_grid.empty()) j["p_grid"] = file.p_grid;
  return j;
}

json to_json(const CoverageReport& report) {
  json j;
  j["config"] = config_to_json(report.config);
  j["lambda"] = report.lambda;
  j["glasso_failures"] = report.glasso_failures;
  j["max_kkt_residual"] = report.max_kkt_residual;
  json methods = json::array();
  for (const auto& m : report.methods) {
    json row;
    row["method"] = to_string(m.method);
    row["available"] = m.available;
    if (!m.available) {
      row["unavailable_reason"] = m.unavailable_reason;
    } else {
      row["attempts"] = m.attempts;
      row["failures"] = m.failures;
      row["invalid"] = m.invalid;
      row["avgcov_S"] = m.avgcov_s;
      row["avglength_S"] = m.avglength_s;
      row["avgcov_Sc"] = optional_number(m.avgcov_sc);
      row["avglength_Sc"] = optional_number(m.avglength_sc);
      if (m.avgcov_selected_s) row["avgcov_S_given_selected"] = *m.avgcov_selected_s;
      if (m.avglength_selected_s) row["avglength_S_given_selected"] = *m.avglength_selected_s;
      if (m.max_condition_number) row["max_condition_number"] = *m.max_condition_number;
      row["coverage"] = sym_to_json(m.coverage);
      row["denominators"] = sym_to_json(m.denominators);
    }
    methods.push_back(std::move(row));
  }
  j["methods"] = std::move(methods);
  return j;
}

json to_json(const NormalityReport& report) {
  json j;
  j["config"] = config_to_json(report.config);
  j["lambda"] = report.lambda;
  j["glasso_failures"] = report.glasso_failures;
  j["max_kkt_residual"] = report.max_kkt_residual;
  json entries = json::array();
  for (const auto& e : report.entries) {
    json h;
    h["lo"] = e.histogram.lo;
    h["hi"] = e.histogram.hi;
    h["counts"] = e.histogram.counts;
    h["below"] = e.histogram.below;
    h["above"] = e.histogram.above;
    entries.push_back(json{{"i", e.i + 1},
                           {"j", e.j + 1},
                           {"ks_distance", e.ks_distance},
                           {"mean", e.mean},
                           {"variance", e.variance},
                           {"histogram", std::move(h)}});
  }
  j["entries"] = std::move(entries);
  return j;
}

json scaling_to_json(const std::vector<ScalingRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) out.push_back(json{{"p", row.p}, {"report", to_json(row.report)}});
  return out;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
  out << "method,avgcov_S,avglength_S,avgcov_Sc,avglength_Sc\n";
  for (const auto& m : report.methods) {
    out << to_string(m.method) << ',';
    if (!m.available) {
      out << "--,--,--,--\n";
      continue;
    }
    out << csv::format_double(m.avgcov_s) << ',' << csv::format_double(m.avglength_s) << ',' << cell(m.avgcov_sc)
        << ',' << cell(m.avglength_sc) << '\n';
  }
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
  out << "p,avgcov_S,avglength_S,avgcov_Sc,avglength_Sc\n";
  for (const auto& row : rows) {
    const MethodCoverage* m = row.report.find(Method::kDesparsified);
    out << row.p << ',';
    if (!m || !m->available) {
      out << "--,--,--,--\n";
      continue;
    }
    out << csv::format_double(m->avgcov_s) << ',' << csv::format_double(m->avglength_s) << ',' << cell(m->avgcov_sc)
        << ',' << cell(m->avglength_sc) << '\n';
  }
}

void write_statistics_csv(std::ostream& out, const NormalityReport& report) {
  out << "replicate";
  for (const auto& e : report.entries) out << ",stat_" << e.i + 1 << '_' << e.j + 1;
  out << '\n';
  const std::size_t rows = report.entries.empty() ? 0 : report.entries.front().statistics.size();
  for (std::size_t r = 0; r < rows; ++r) {
    out << r;
    for (const auto& e : report.entries) out << ',' << csv::format_double(e.statistics[r]);
    out << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& histogram) {
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < histogram.counts.size(); ++b)
    out << csv::format_double(histogram.bin_left(b)) << ',' << csv::format_double(histogram.bin_right(b)) << ','
        << histogram.counts[b] << '\n';
}

void print_coverage_table(std::ostream& out, const CoverageReport& report) {
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %10s %12s %10s %12s\n", "method", "Avgcov_S", "Avglength_S", "Avgcov_Sc",
                "Avglength_Sc");
  out << line;
  for (const auto& m : report.methods) {
    if (!m.available) {
      std::snprintf(line, sizeof line, "%-20s %10s %12s %10s %12s\n", method_label(m.method).c_str(), "--", "--", "--",
                    "--");
    } else {
      std::snprintf(line, sizeof line, "%-20s %10s %12s %10s %12s%s\n", method_label(m.method).c_str(),
                    fixed3(m.avgcov_s).c_str(), fixed3(m.avglength_s).c_str(), cell3(m.avgcov_sc).c_str(),
                    cell3(m.avglength_sc).c_str(), m.invalid ? "  [invalid: >5% failures]" : "");
    }
    out << line;
  }
}

void print_scaling_table(std::ostream& out, const std::vector<ScalingRow>& rows) {
  char line[160];
  std::snprintf(line, sizeof line, "%6s %10s %12s %10s %12s\n", "p", "Avgcov_S", "Avglength_S", "Avgcov_Sc",
                "Avglength_Sc");
  out << line;
  for (const auto& row : rows) {
    const MethodCoverage* m = row.report.find(Method::kDesparsified);
    if (!m || !m->available) continue;
    std::snprintf(line, sizeof line, "%6zu %10s %12s %10s %12s\n", row.p, fixed3(m->avgcov_s).c_str(),
                  fixed3(m->avglength_s).c_str(), cell3(m->avgcov_sc).c_str(), cell3(m->avglength_sc).c_str());
    out << line;
  }
}

}  // namespace dsglasso
