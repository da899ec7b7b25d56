// dsglasso: command-line front-end.
//
// Exit codes: 0 success, 2 input or schema error (nothing written),
// 3 solver non-convergence (partial output, flagged in metadata.json),
// 4 singular Gamma_SS block, 1 anything else.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsglasso/baselines.hpp"
#include "dsglasso/config.hpp"
#include "dsglasso/csv.hpp"
#include "dsglasso/diagnostics.hpp"
#include "dsglasso/experiments.hpp"
#include "dsglasso/glasso.hpp"
#include "dsglasso/inference.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsglasso;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitSingular = 4;

// Raised after partial output has been written.
struct PartialFailure {
  std::string message;
};

struct SolverFlags {
  std::string input;
  std::string input_kind = "data";
  std::string lambda = "auto";
  double tol = 1e-7;
  double kkt_tol = 1e-6;
  int max_iter = 10000;
  bool center = false;
  std::optional<Index> n;
  std::string out_dir;
};

struct Loaded {
  SymMatrix sigma_hat;
  Index n = 0;
};

void add_solver_flags(CLI::App& cmd, SolverFlags& f) {
  cmd.add_option("--input", f.input, "Input CSV (header-free, comma-separated)")->required();
  cmd.add_option("--input-kind", f.input_kind, "Input is raw observations (data) or a covariance matrix")
      ->check(CLI::IsMember({"data", "covariance"}))
      ->capture_default_str();
  cmd.add_option("--lambda", f.lambda, "Penalty: 'auto' for sqrt(log p / n) or a non-negative number")
      ->capture_default_str();
  cmd.add_option("--tol", f.tol, "Sweep tolerance relative to mean |offdiag(Sigma_hat)|")->capture_default_str();
  cmd.add_option("--kkt-tol", f.kkt_tol, "Largest accepted KKT residual")->capture_default_str();
  cmd.add_option("--max-iter", f.max_iter, "Maximum outer sweeps")->capture_default_str();
  cmd.add_flag("--center", f.center, "Subtract column means before forming the sample covariance (data input)");
  cmd.add_option("--n", f.n, "Sample size; required with covariance input when n is needed");
  cmd.add_option("--out-dir", f.out_dir, "Output directory")->required();
}

Loaded load_input(const SolverFlags& f, bool need_n) {
  Loaded out;
  if (f.input_kind == "data") {
    DataMatrix x = csv::read_data_file(f.input);
    if (f.center) {
      Eigen::MatrixXd m = x.rows();
      m.rowwise() -= m.colwise().mean();
      x = DataMatrix(std::move(m));
    }
    out.sigma_hat = sample_covariance(x);
    out.n = x.n();
    if (f.n && *f.n != out.n) throw InputError("--n disagrees with the number of data rows");
  } else {
    if (f.center) throw InputError("--center applies to data input only");
    out.sigma_hat = csv::read_symmetric_file(f.input);
    if (f.n) out.n = *f.n;
    if (need_n && !f.n) throw InputError("--n is required with covariance input");
  }
  return out;
}

double resolve_lambda(const std::string& flag, Index p, Index n) {
  if (flag == "auto") {
    if (n == 0) throw InputError("--lambda auto needs the sample size; pass --n");
    return default_lambda(p, n);
  }
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(flag, &used);
    if (used != flag.size()) throw std::invalid_argument(flag);
  } catch (const std::exception&) {
    throw InputError("--lambda must be 'auto' or a number, got '" + flag + "'");
  }
  if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("--lambda must be non-negative");
  return v;
}

void validate_solver(const SolverFlags& f) {
  if (!(f.tol > 0.0)) throw InputError("--tol must be positive");
  if (!(f.kkt_tol > 0.0)) throw InputError("--kkt-tol must be positive");
  if (f.max_iter < 1) throw InputError("--max-iter must be at least 1");
  if (f.n && *f.n < 1) throw InputError("--n must be positive");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  body(out);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

struct Estimated {
  Loaded input;
  GlassoSolution solution;
  json metadata;
};

// Runs the solver; on non-convergence writes the last iterate with
// converged=false and raises PartialFailure.
Estimated estimate(const SolverFlags& f, bool need_n) {
  validate_solver(f);
  Estimated e;
  e.input = load_input(f, need_n);
  const Index p = e.input.sigma_hat.dim();
  GlassoConfig g;
  g.lambda = resolve_lambda(f.lambda, p, e.input.n);
  g.tol = f.tol;
  g.kkt_tol = f.kkt_tol;
  g.max_iter = f.max_iter;

  e.metadata["p"] = p;
  if (e.input.n > 0) e.metadata["n"] = e.input.n;
  e.metadata["lambda"] = g.lambda;
  e.metadata["lambda_rule"] = f.lambda == "auto" ? "sqrt_logp_over_n" : "fixed";
  e.metadata["tol"] = f.tol;
  e.metadata["kkt_tol"] = f.kkt_tol;
  e.metadata["max_iter"] = f.max_iter;
  e.metadata["centered"] = f.center;
  try {
    e.solution = graphical_lasso(e.input.sigma_hat, g);
  } catch (const ConvergenceError& err) {
    ensure_dir(f.out_dir);
    csv::write_matrix_file((fs::path(f.out_dir) / "theta.csv").string(), err.last_iterate().dense());
    e.metadata["converged"] = false;
    e.metadata["iterations"] = err.iterations();
    e.metadata["kkt_residual"] = std::isfinite(err.residual()) ? json(err.residual()) : json(nullptr);
    write_json(fs::path(f.out_dir) / "metadata.json", e.metadata);
    throw PartialFailure{err.what()};
  }
  e.metadata["converged"] = true;
  e.metadata["iterations"] = e.solution.iterations;
  e.metadata["kkt_residual"] = e.solution.kkt_residual;
  e.metadata["dual_gap"] = std::isfinite(e.solution.dual_gap) ? json(e.solution.dual_gap) : json(nullptr);
  return e;
}

int cmd_estimate(const SolverFlags& f) {
  Estimated e = estimate(f, false);
  ensure_dir(f.out_dir);
  csv::write_matrix_file((fs::path(f.out_dir) / "theta.csv").string(), e.solution.theta.dense());
  write_json(fs::path(f.out_dir) / "metadata.json", e.metadata);
  std::cout << "lambda " << csv::format_double(e.solution.lambda) << ", " << e.solution.iterations
            << " sweeps, KKT residual " << csv::format_double(e.solution.kkt_residual) << '\n';
  return kExitOk;
}

void check_alpha_flag(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("--alpha must lie in (0,1)");
}

int cmd_infer(const SolverFlags& f, double alpha) {
  check_alpha_flag(alpha);
  Estimated e = estimate(f, true);
  if (e.input.n < 2) throw InputError("inference needs n >= 2");
  const DesparsifiedEstimate est = desparsify(e.solution.theta, e.input.sigma_hat);
  const IntervalTable table = confidence_intervals(est, e.input.n, alpha);
  e.metadata["alpha"] = alpha;
  e.metadata["quantile"] = table.quantile();
  ensure_dir(f.out_dir);
  const fs::path dir(f.out_dir);
  csv::write_matrix_file((dir / "theta.csv").string(), e.solution.theta.dense());
  csv::write_matrix_file((dir / "t_hat.csv").string(), est.t_hat.dense());
  write_text(dir / "intervals.csv", [&](std::ostream& out) { table.write_csv(out); });
  write_json(dir / "intervals.json", table.to_json());
  write_json(dir / "metadata.json", e.metadata);
  std::cout << "wrote " << table.dim() * (table.dim() + 1) / 2 << " intervals at level " << 1.0 - alpha << '\n';
  return kExitOk;
}

void write_edges(std::ostream& out, const EdgeSet& edges, const DesparsifiedEstimate& est, Index n, double alpha) {
  const Index p = est.t_hat.dim();
  const double z =
      p > 1 ? std_normal_quantile(1.0 - alpha / (static_cast<double>(p) * static_cast<double>(p - 1))) : 0.0;
  out << "i,j,t_hat,sigma_hat,threshold\n";
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      if (!edges.contains(i, j)) continue;
      const double sigma = std::sqrt(plugin_variance(est.theta_hat, i, j));
      out << i + 1 << ',' << j + 1 << ',' << csv::format_double(est.t_hat(i, j)) << ',' << csv::format_double(sigma)
          << ',' << csv::format_double(z * sigma / std::sqrt(static_cast<double>(n))) << '\n';
    }
  }
}

int cmd_edges(const SolverFlags& f, double alpha) {
  check_alpha_flag(alpha);
  Estimated e = estimate(f, true);
  if (e.input.n < 2) throw InputError("edge selection needs n >= 2");
  const DesparsifiedEstimate est = desparsify(e.solution.theta, e.input.sigma_hat);
  const EdgeSet edges = threshold_edges(est, e.input.n, alpha);
  e.metadata["alpha"] = alpha;
  e.metadata["edges"] = edges.off_diagonal_size();
  ensure_dir(f.out_dir);
  const fs::path dir(f.out_dir);
  write_text(dir / "edges.csv", [&](std::ostream& out) { write_edges(out, edges, est, e.input.n, alpha); });
  write_json(dir / "metadata.json", e.metadata);
  std::cout << edges.off_diagonal_size() << " edges selected\n";
  return kExitOk;
}

struct ModelFlags {
  std::string kind = "chain";
  Index p = 0;
  std::optional<double> rho;
  std::vector<Index> block_sizes;
  std::optional<double> block_value;
  std::vector<double> diagonal;
};

void add_model_flags(CLI::App& cmd, ModelFlags& m) {
  cmd.add_option("--model", m.kind, "True model: chain, toeplitz_cov, block_diag or diagonal")
      ->check(CLI::IsMember({"chain", "toeplitz_cov", "block_diag", "diagonal"}))
      ->capture_default_str();
  cmd.add_option("--p", m.p, "Dimension")->required();
  cmd.add_option("--rho", m.rho, "Chain off-diagonal value or Toeplitz covariance decay");
  cmd.add_option("--block-sizes", m.block_sizes, "Block sizes for block_diag (sum to p)")->delimiter(',');
  cmd.add_option("--block-value", m.block_value, "Off-diagonal value inside each block");
  cmd.add_option("--diagonal", m.diagonal, "Diagonal of Theta* for the diagonal model")->delimiter(',');
}

ModelSpec model_spec(const ModelFlags& m) {
  json j;
  j["kind"] = m.kind;
  j["p"] = m.p;
  if (m.rho) j["rho"] = *m.rho;
  if (!m.block_sizes.empty()) j["block_sizes"] = m.block_sizes;
  if (m.block_value) j["block_value"] = *m.block_value;
  if (!m.diagonal.empty()) j["diagonal"] = m.diagonal;
  return model_from_json(j);
}

int cmd_diagnose(const ModelFlags& m, std::optional<Index> n, double gamma, double k, const std::string& out_dir) {
  if (!(gamma > 0.0) || !(k > 0.0)) throw InputError("--gamma and --k must be positive");
  const ModelSpec spec = model_spec(m);
  const TrueModel model = make_precision(spec);
  const StructureReport report = structure_report(model, n.value_or(0), gamma, k);
  print_report(std::cout, report);
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    json j = to_json(report);
    j["model"] = to_json(spec);
    write_json(fs::path(out_dir) / "report.json", j);
  }
  return kExitOk;
}

ExperimentFile load_config(const std::string& path, std::optional<unsigned> threads, ExperimentKind expected) {
  ExperimentFile file = load_experiment_file(path);
  if (file.kind != expected) throw InputError("config schema error: experiment kind does not match this subcommand");
  if (threads) file.config.threads = *threads;
  return file;
}

void warn_invalid(const CoverageReport& report) {
  for (const auto& m : report.methods)
    if (m.invalid)
      std::cerr << "warning: " << to_string(m.method) << " failed on " << m.failures << " of " << m.attempts
                << " replicates; its averages are flagged invalid\n";
}

int cmd_coverage(const std::string& config, const std::string& out_dir, std::optional<unsigned> threads) {
  const ExperimentFile file = load_config(config, threads, ExperimentKind::kCoverage);
  const CoverageReport report = run_coverage(file.config);
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  write_text(dir / "coverage.csv", [&](std::ostream& out) { write_coverage_csv(out, report); });
  json j = to_json(report);
  j["experiment"] = to_json(file);
  write_json(dir / "coverage.json", j);
  write_text(dir / "table.txt", [&](std::ostream& out) { print_coverage_table(out, report); });
  print_coverage_table(std::cout, report);
  warn_invalid(report);
  return kExitOk;
}

int cmd_normality(const std::string& config, const std::string& out_dir, std::optional<unsigned> threads) {
  const ExperimentFile file = load_config(config, threads, ExperimentKind::kNormality);
  const NormalityReport report = run_normality(file.config, file.entries);
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  write_text(dir / "statistics.csv", [&](std::ostream& out) { write_statistics_csv(out, report); });
  for (const auto& e : report.entries) {
    const std::string name = "histogram_" + std::to_string(e.i + 1) + "_" + std::to_string(e.j + 1) + ".csv";
    write_text(dir / name, [&](std::ostream& out) { write_histogram_csv(out, e.histogram); });
  }
  json j = to_json(report);
  j["experiment"] = to_json(file);
  write_json(dir / "normality.json", j);
  for (const auto& e : report.entries)
    std::cout << "entry (" << e.i + 1 << "," << e.j + 1 << "): KS " << csv::format_double(e.ks_distance) << ", mean "
              << csv::format_double(e.mean) << ", variance " << csv::format_double(e.variance) << '\n';
  return kExitOk;
}

int cmd_scaling(const std::string& config, const std::string& out_dir, std::optional<unsigned> threads) {
  const ExperimentFile file = load_config(config, threads, ExperimentKind::kScaling);
  const std::vector<ScalingRow> rows = run_scaling_table(file.p_grid, file.config);
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  write_text(dir / "scaling.csv", [&](std::ostream& out) { write_scaling_csv(out, rows); });
  json j;
  j["experiment"] = to_json(file);
  j["rows"] = scaling_to_json(rows);
  write_json(dir / "scaling.json", j);
  write_text(dir / "table.txt", [&](std::ostream& out) { print_scaling_table(out, rows); });
  print_scaling_table(std::cout, rows);
  for (const auto& row : rows) warn_invalid(row.report);
  return kExitOk;
}

struct PipelineFlags {
  std::string input;
  Index split = 10;
  std::optional<Index> top_k;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool center = false;
  std::string out_dir;
};

int cmd_pipeline(const PipelineFlags& f) {
  check_alpha_flag(f.alpha);
  const DataMatrix data = csv::read_data_file(f.input);
  const Index top_k = f.top_k.value_or(std::min<Index>(500, data.p()));
  SeededRng rng(f.seed, 0);
  const PipelineResult r = real_data_pipeline(data, f.split, top_k, f.alpha, rng, f.center);

  json meta;
  meta["n"] = data.n();
  meta["p"] = data.p();
  meta["top_k"] = top_k;
  meta["split"] = f.split;
  meta["seed"] = f.seed;
  meta["centered"] = f.center;
  meta["n_used"] = r.n_used;
  meta["lambda"] = r.lambda;
  meta["alpha"] = f.alpha;
  meta["iterations"] = r.glasso.iterations;
  meta["kkt_residual"] = r.glasso.kkt_residual;
  meta["edges"] = r.edges.off_diagonal_size();
  json cols = json::array();
  for (Index c : r.selected_columns) cols.push_back(c + 1);
  meta["selected_columns"] = std::move(cols);
  json rows = json::array();
  for (Index c : r.split_rows) rows.push_back(c + 1);
  meta["split_rows"] = std::move(rows);

  const DesparsifiedEstimate est{r.intervals.centers(), r.glasso.theta, SymMatrix(r.glasso.theta.dim())};
  ensure_dir(f.out_dir);
  const fs::path dir(f.out_dir);
  write_text(dir / "edges.csv", [&](std::ostream& out) { write_edges(out, r.edges, est, r.n_used, f.alpha); });
  write_text(dir / "intervals.csv", [&](std::ostream& out) { r.intervals.write_csv(out); });
  write_json(dir / "metadata.json", meta);
  std::cout << r.edges.off_diagonal_size() << " edges selected among " << top_k << " variables\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse precision matrix estimation and entrywise inference with the de-sparsified graphical Lasso"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SolverFlags est_f, inf_f, edg_f;
  double inf_alpha = 0.05, edg_alpha = 0.05;
  auto* c_est = app.add_subcommand("estimate", "Graphical Lasso estimate; writes theta.csv and metadata.json");
  add_solver_flags(*c_est, est_f);
  auto* c_inf = app.add_subcommand("infer", "De-sparsified estimate with entrywise confidence intervals");
  add_solver_flags(*c_inf, inf_f);
  c_inf->add_option("--alpha", inf_alpha, "Intervals have level 1 - alpha")->capture_default_str();
  auto* c_edg = app.add_subcommand("edges", "Edges whose de-sparsified entry passes the family-level threshold");
  add_solver_flags(*c_edg, edg_f);
  c_edg->add_option("--alpha", edg_alpha, "Family-level error rate")->capture_default_str();

  ModelFlags diag_m;
  std::optional<Index> diag_n;
  double diag_gamma = 2.5, diag_k = 1.0;
  std::string diag_out;
  auto* c_diag = app.add_subcommand("diagnose", "Print kappa_Sigma, kappa_Gamma, irrepresentability and sparsity");
  add_model_flags(*c_diag, diag_m);
  c_diag->add_option("--n", diag_n, "Sample size for the theoretical lambda");
  c_diag->add_option("--gamma", diag_gamma, "Tail exponent in the theoretical lambda")->capture_default_str();
  c_diag->add_option("--k", diag_k, "Sub-Gaussian constant in the theoretical lambda")->capture_default_str();
  c_diag->add_option("--out-dir", diag_out, "Also write report.json here");

  std::string cov_cfg, cov_out, norm_cfg, norm_out, sc_cfg, sc_out;
  std::optional<unsigned> cov_threads, norm_threads, sc_threads;
  auto* c_cov = app.add_subcommand("coverage", "Monte Carlo coverage table from a config file");
  c_cov->add_option("--config", cov_cfg, "Experiment config (JSON)")->required();
  c_cov->add_option("--out-dir", cov_out, "Output directory")->required();
  c_cov->add_option("--threads", cov_threads, "Worker threads (default: all execution units)");
  auto* c_norm = app.add_subcommand("normality", "Standardized statistics, histograms and KS distances");
  c_norm->add_option("--config", norm_cfg, "Experiment config (JSON)")->required();
  c_norm->add_option("--out-dir", norm_out, "Output directory")->required();
  c_norm->add_option("--threads", norm_threads, "Worker threads (default: all execution units)");
  auto* c_sc = app.add_subcommand("scaling", "De-sparsified coverage across a grid of dimensions");
  c_sc->add_option("--config", sc_cfg, "Experiment config (JSON)")->required();
  c_sc->add_option("--out-dir", sc_out, "Output directory")->required();
  c_sc->add_option("--threads", sc_threads, "Worker threads (default: all execution units)");

  PipelineFlags pipe;
  auto* c_pipe = app.add_subcommand("pipeline", "Real-data pipeline: top-variance columns, split scaling, thresholding");
  c_pipe->add_option("--input", pipe.input, "Data CSV (rows are observations)")->required();
  c_pipe->add_option("--split", pipe.split, "Rows used to estimate the variances")->capture_default_str();
  c_pipe->add_option("--top-k", pipe.top_k, "Number of highest-variance columns kept (default min(500, p))");
  c_pipe->add_option("--alpha", pipe.alpha, "Family-level error rate")->capture_default_str();
  c_pipe->add_option("--seed", pipe.seed, "Seed for the random split")->capture_default_str();
  c_pipe->add_flag("--center", pipe.center, "Center the remaining rows with the split means");
  c_pipe->add_option("--out-dir", pipe.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*c_est) return cmd_estimate(est_f);
    if (*c_inf) return cmd_infer(inf_f, inf_alpha);
    if (*c_edg) return cmd_edges(edg_f, edg_alpha);
    if (*c_diag) return cmd_diagnose(diag_m, diag_n, diag_gamma, diag_k, diag_out);
    if (*c_cov) return cmd_coverage(cov_cfg, cov_out, cov_threads);
    if (*c_norm) return cmd_normality(norm_cfg, norm_out, norm_threads);
    if (*c_sc) return cmd_scaling(sc_cfg, sc_out, sc_threads);
    if (*c_pipe) return cmd_pipeline(pipe);
  } catch (const PartialFailure& e) {
    std::cerr << "error: " << e.message << " (partial output written, converged=false)\n";
    return kExitNoConvergence;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const SingularityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSingular;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DefinitenessError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
