#include "dsglasso/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "dsglasso/baselines.hpp"
#include "parallel.hpp"

namespace dsglasso {

std::string to_string(Method method) {
  switch (method) {
    case Method::kDesparsified: return "desparsified";
    case Method::kOracleMle: return "oracle_mle";
    case Method::kPostSelectionMle: return "post_selection_mle";
    case Method::kSampleCov: return "sample_cov";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "desparsified") return Method::kDesparsified;
  if (name == "oracle_mle") return Method::kOracleMle;
  if (name == "post_selection_mle") return Method::kPostSelectionMle;
  if (name == "sample_cov") return Method::kSampleCov;
  throw InputError("unknown method '" + name + "'");
}

double LambdaRule::resolve(Index p, Index n) const {
  return kind == Kind::kFixed ? value : default_lambda(p, n);
}

void ExperimentConfig::validate() const {
  if (model.p < 1) throw InputError("config: model dimension must be positive");
  if (n < 2) throw InputError("config: n must be at least 2");
  if (replicates < 1) throw InputError("config: replicates must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("config: alpha must lie in (0,1)");
  if (lambda_rule.kind == LambdaRule::Kind::kFixed && !(lambda_rule.value >= 0.0))
    throw InputError("config: fixed lambda must be non-negative");
  if (methods.empty()) throw InputError("config: at least one method is required");
  for (std::size_t a = 0; a < methods.size(); ++a)
    for (std::size_t b = a + 1; b < methods.size(); ++b)
      if (methods[a] == methods[b]) throw InputError("config: duplicate method '" + to_string(methods[a]) + "'");
  if (!(glasso_tol > 0.0) || !(kkt_tol > 0.0) || glasso_max_iter < 1) throw InputError("config: bad solver settings");
  if (!(mle_tol > 0.0) || mle_max_iter < 1) throw InputError("config: bad MLE settings");
}

const MethodCoverage* CoverageReport::find(Method method) const {
  for (const auto& m : methods)
    if (m.method == method) return &m;
  return nullptr;
}

namespace {

bool uses_glasso(const std::vector<Method>& methods) {
  return std::any_of(methods.begin(), methods.end(),
                     [](Method m) { return m == Method::kDesparsified || m == Method::kPostSelectionMle; });
}

// Upper-triangle enumeration (i <= j), row by row.
struct PackedIndex {
  Index p;
  Index size() const { return p * (p + 1) / 2; }
  Index operator()(Index i, Index j) const {
    if (i > j) std::swap(i, j);
    return i * p - i * (i + 1) / 2 + j;
  }
};

struct MethodRecord {
  bool ok = false;
  std::vector<unsigned char> hit;       // packed
  std::vector<unsigned char> included;  // packed; entry counted in this replicate
  std::vector<double> length;           // packed
  std::vector<unsigned char> selected;  // packed; post-selection MLE only
  double condition_number = 0.0;
};

struct ReplicateRecord {
  bool glasso_ok = true;
  double kkt_residual = 0.0;
  std::vector<MethodRecord> methods;
};

struct Context {
  const ExperimentConfig& config;
  TrueModel truth;
  Eigen::MatrixXd factor;
  double lambda;
  bool sample_cov_possible;

  explicit Context(const ExperimentConfig& c)
      : config(c),
        truth(make_precision(c.model)),
        factor(cholesky(truth.sigma)),
        lambda(c.lambda_rule.resolve(c.model.p, c.n)),
        sample_cov_possible(c.n > c.model.p) {}

  GlassoConfig glasso_config() const {
    GlassoConfig g;
    g.lambda = lambda;
    g.tol = config.glasso_tol;
    g.kkt_tol = config.kkt_tol;
    g.max_iter = config.glasso_max_iter;
    g.penalize_diagonal = config.penalize_diagonal;
    return g;
  }
};

void record_intervals(const IntervalTable& table, const SymMatrix& truth, const EdgeSet* mask, const PackedIndex& idx,
                      MethodRecord& rec) {
  const Index p = idx.p;
  rec.hit.assign(idx.size(), 0);
  rec.included.assign(idx.size(), 0);
  rec.length.assign(idx.size(), 0.0);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i; j < p; ++j) {
      if (mask && !mask->contains(i, j)) continue;
      const Index u = idx(i, j);
      rec.included[u] = 1;
      rec.hit[u] = table.covers(i, j, truth(i, j)) ? 1 : 0;
      rec.length[u] = table.length(i, j);
    }
  }
}

ReplicateRecord run_replicate(const Context& ctx, Index replicate) {
  const ExperimentConfig& cfg = ctx.config;
  const PackedIndex idx{cfg.model.p};
  SeededRng rng(cfg.seed, replicate);
  const DataMatrix x = sample_gaussian_with_factor(ctx.factor, cfg.n, rng);
  const SymMatrix s = sample_covariance(x);

  ReplicateRecord out;
  out.methods.resize(cfg.methods.size());

  std::optional<GlassoSolution> glasso;
  if (uses_glasso(cfg.methods)) {
    try {
      glasso = graphical_lasso(s, ctx.glasso_config());
      out.kkt_residual = glasso->kkt_residual;
    } catch (const ConvergenceError&) {
      out.glasso_ok = false;
    }
  }

  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    MethodRecord& rec = out.methods[m];
    try {
      switch (cfg.methods[m]) {
        case Method::kDesparsified: {
          if (!glasso) break;
          const DesparsifiedEstimate est = desparsify(glasso->theta, s);
          record_intervals(confidence_intervals(est, cfg.n, cfg.alpha), ctx.truth.theta, nullptr, idx, rec);
          rec.ok = true;
          break;
        }
        case Method::kOracleMle: {
          const ConstrainedMleSolution mle = constrained_mle(s, ctx.truth.support, cfg.mle_tol, cfg.mle_max_iter);
          const IntervalTable table(mle.theta, mle_variances(mle.theta, mle.support), cfg.n, cfg.alpha);
          record_intervals(table, ctx.truth.theta, &mle.support, idx, rec);
          rec.ok = true;
          break;
        }
        case Method::kPostSelectionMle: {
          if (!glasso) break;
          const EdgeSet selected = EdgeSet::nonzeros(glasso->theta);
          const ConstrainedMleSolution mle = post_selection_mle(s, selected, cfg.mle_tol, cfg.mle_max_iter);
          const IntervalTable table(mle.theta, mle_variances(mle.theta, mle.support), cfg.n, cfg.alpha);
          record_intervals(table, ctx.truth.theta, nullptr, idx, rec);
          rec.selected.assign(idx.size(), 0);
          for (const auto& [i, j] : mle.support.pairs())
            if (i <= j) rec.selected[idx(i, j)] = 1;
          rec.ok = true;
          break;
        }
        case Method::kSampleCov: {
          if (!ctx.sample_cov_possible) break;
          const SymMatrix theta = inverse_sample_covariance(s);
          const IntervalTable table(theta, plugin_variances(theta), cfg.n, cfg.alpha);
          record_intervals(table, ctx.truth.theta, nullptr, idx, rec);
          const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.dense(), Eigen::EigenvaluesOnly);
          rec.condition_number = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
          rec.ok = true;
          break;
        }
      }
    } catch (const ConvergenceError&) {
      rec.ok = false;
    } catch (const DefinitenessError&) {
      rec.ok = false;
    }
  }
  return out;
}

struct Accumulator {
  std::vector<Index> hits;
  std::vector<Index> counts;
  std::vector<double> length_sum;
  std::vector<Index> sel_hits;
  std::vector<Index> sel_counts;
  std::vector<double> sel_length_sum;
  Index attempts = 0;
  Index failures = 0;
  double max_condition = 0.0;

  explicit Accumulator(Index packed)
      : hits(packed, 0), counts(packed, 0), length_sum(packed, 0.0), sel_hits(packed, 0), sel_counts(packed, 0),
        sel_length_sum(packed, 0.0) {}

  void add(const MethodRecord& rec) {
    ++attempts;
    if (!rec.ok) {
      ++failures;
      return;
    }
    for (std::size_t u = 0; u < hits.size(); ++u) {
      if (!rec.included[u]) continue;
      ++counts[u];
      hits[u] += rec.hit[u];
      length_sum[u] += rec.length[u];
      if (!rec.selected.empty() && rec.selected[u]) {
        ++sel_counts[u];
        sel_hits[u] += rec.hit[u];
        sel_length_sum[u] += rec.length[u];
      }
    }
    max_condition = std::max(max_condition, rec.condition_number);
  }
};

struct SetAverage {
  double coverage = 0.0;
  double length = 0.0;
  Index entries = 0;
};

// Averages over the ordered pairs in `pairs` that were counted at least once.
SetAverage average_over(const std::vector<std::pair<Index, Index>>& pairs, const std::vector<Index>& counts,
                        const std::vector<Index>& hits, const std::vector<double>& length_sum,
                        const PackedIndex& idx) {
  SetAverage out;
  for (const auto& [i, j] : pairs) {
    const Index u = idx(i, j);
    if (counts[u] == 0) continue;
    const auto c = static_cast<double>(counts[u]);
    out.coverage += static_cast<double>(hits[u]) / c;
    out.length += length_sum[u] / c;
    ++out.entries;
  }
  if (out.entries > 0) {
    out.coverage /= static_cast<double>(out.entries);
    out.length /= static_cast<double>(out.entries);
  }
  return out;
}

// Runs replicates in chunks of `threads` and hands each record to `fold` in
// replicate order.
template <class Fold>
void for_each_replicate(const Context& ctx, Fold&& fold) {
  const unsigned threads = detail::resolve_threads(ctx.config.threads);
  const Index total = ctx.config.replicates;
  const Index chunk = std::max<Index>(1, threads);
  std::vector<ReplicateRecord> records;
  for (Index start = 0; start < total; start += chunk) {
    const Index stop = std::min(total, start + chunk);
    records.assign(stop - start, ReplicateRecord{});
    detail::parallel_for(stop - start, threads, [&](std::size_t k) { records[k] = run_replicate(ctx, start + k); });
    for (auto& rec : records) fold(rec);
  }
}

}  // namespace

CoverageReport run_coverage(const ExperimentConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const Context ctx(config);
  const Index p = config.model.p;
  const PackedIndex idx{p};

  std::vector<Accumulator> acc(config.methods.size(), Accumulator(idx.size()));
  CoverageReport report;
  report.config = config;
  report.lambda = ctx.lambda;

  for_each_replicate(ctx, [&](const ReplicateRecord& rec) {
    if (!rec.glasso_ok) ++report.glasso_failures;
    report.max_kkt_residual = std::max(report.max_kkt_residual, rec.kkt_residual);
    for (std::size_t m = 0; m < config.methods.size(); ++m) acc[m].add(rec.methods[m]);
  });

  const auto s_pairs = ctx.truth.support.pairs();
  const auto sc_pairs = ctx.truth.support.complement();
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    MethodCoverage mc;
    mc.method = config.methods[m];
    mc.attempts = acc[m].attempts;
    mc.failures = acc[m].failures;
    mc.coverage = SymMatrix(p);
    mc.denominators = SymMatrix(p);
    if (mc.method == Method::kSampleCov && !ctx.sample_cov_possible) {
      mc.available = false;
      mc.unavailable_reason = "sample covariance is singular (n <= p)";
    } else if (mc.failures == mc.attempts) {
      mc.available = false;
      mc.unavailable_reason = "method failed on every replicate";
    }
    if (mc.available) {
      mc.invalid = static_cast<double>(mc.failures) > 0.05 * static_cast<double>(mc.attempts);
      for (Index i = 0; i < p; ++i) {
        for (Index j = i; j < p; ++j) {
          const Index u = idx(i, j);
          const Index count = acc[m].counts[u];
          mc.denominators.set(i, j, static_cast<double>(count));
          mc.coverage.set(i, j, count ? static_cast<double>(acc[m].hits[u]) / static_cast<double>(count) : 0.0);
        }
      }
      const Accumulator& a = acc[m];
      const SetAverage on_s = average_over(s_pairs, a.counts, a.hits, a.length_sum, idx);
      mc.avgcov_s = on_s.coverage;
      mc.avglength_s = on_s.length;
      if (mc.method == Method::kDesparsified || mc.method == Method::kSampleCov) {
        const SetAverage on_sc = average_over(sc_pairs, a.counts, a.hits, a.length_sum, idx);
        if (on_sc.entries > 0) {
          mc.avgcov_sc = on_sc.coverage;
          mc.avglength_sc = on_sc.length;
        }
      }
      if (mc.method == Method::kPostSelectionMle) {
        const SetAverage sel = average_over(s_pairs, a.sel_counts, a.sel_hits, a.sel_length_sum, idx);
        if (sel.entries > 0) {
          mc.avgcov_selected_s = sel.coverage;
          mc.avglength_selected_s = sel.length;
        }
      }
      if (mc.method == Method::kSampleCov) mc.max_condition_number = acc[m].max_condition;
    }
    report.methods.push_back(std::move(mc));
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Normality

double Histogram::bin_left(std::size_t b) const {
  return lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(counts.size());
}

double Histogram::bin_right(std::size_t b) const { return bin_left(b + 1); }

Histogram make_histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw InputError("make_histogram: bad binning");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (v < lo) {
      ++h.below;
    } else if (v > hi) {
      ++h.above;
    } else {
      auto b = static_cast<std::size_t>((v - lo) / width);
      if (b >= bins) b = bins - 1;  // v == hi
      ++h.counts[b];
    }
  }
  return h;
}

double ks_distance_normal(std::vector<double> values) {
  if (values.empty()) throw InputError("ks_distance_normal: no values");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double f = std_normal_cdf(values[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return d;
}

NormalityReport run_normality(const ExperimentConfig& config, const std::vector<std::pair<Index, Index>>& entries) {
  config.validate();
  if (entries.empty()) throw InputError("run_normality: no entries requested");
  for (const auto& [i, j] : entries)
    if (i >= config.model.p || j >= config.model.p) throw InputError("run_normality: entry out of range");
  const auto started = std::chrono::steady_clock::now();

  ExperimentConfig cfg = config;
  cfg.methods = {Method::kDesparsified};
  const Context ctx(cfg);

  NormalityReport report;
  report.config = config;
  report.lambda = ctx.lambda;
  report.entries.resize(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    report.entries[e].i = entries[e].first;
    report.entries[e].j = entries[e].second;
  }

  const unsigned threads = detail::resolve_threads(cfg.threads);
  const Index chunk = std::max<Index>(1, threads);
  struct Record {
    bool ok = false;
    double kkt = 0.0;
    std::vector<double> stats;
  };
  std::vector<Record> records;
  for (Index start = 0; start < cfg.replicates; start += chunk) {
    const Index stop = std::min(cfg.replicates, start + chunk);
    records.assign(stop - start, Record{});
    detail::parallel_for(stop - start, threads, [&](std::size_t k) {
      SeededRng rng(cfg.seed, start + k);
      const DataMatrix x = sample_gaussian_with_factor(ctx.factor, cfg.n, rng);
      const SymMatrix s = sample_covariance(x);
      Record& rec = records[k];
      try {
        const GlassoSolution sol = graphical_lasso(s, ctx.glasso_config());
        const DesparsifiedEstimate est = desparsify(sol.theta, s);
        for (const auto& [i, j] : entries) rec.stats.push_back(standardized_statistic(est, ctx.truth.theta, cfg.n, i, j));
        rec.kkt = sol.kkt_residual;
        rec.ok = true;
      } catch (const ConvergenceError&) {
        rec.ok = false;
      }
    });
    for (const Record& rec : records) {
      if (!rec.ok) {
        ++report.glasso_failures;
        continue;
      }
      report.max_kkt_residual = std::max(report.max_kkt_residual, rec.kkt);
      for (std::size_t e = 0; e < entries.size(); ++e) report.entries[e].statistics.push_back(rec.stats[e]);
    }
  }

  for (auto& entry : report.entries) {
    const auto& v = entry.statistics;
    entry.histogram = make_histogram(v);
    if (v.empty()) continue;
    entry.ks_distance = ks_distance_normal(v);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    entry.mean = mean;
    entry.variance = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Scaling

std::vector<ScalingRow> run_scaling_table(const std::vector<Index>& p_grid, const ExperimentConfig& base) {
  if (p_grid.empty()) throw InputError("run_scaling_table: empty p grid");
  std::vector<ScalingRow> rows;
  for (Index p : p_grid) {
    ExperimentConfig cfg = base;
    cfg.model.p = p;
    cfg.methods = {Method::kDesparsified};
    rows.push_back({p, run_coverage(cfg)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Real-data pipeline

PipelineResult real_data_pipeline(const DataMatrix& data, Index split_count, Index top_k, double alpha,
                                  SeededRng& rng, bool center) {
  const Index n = data.n();
  const Index p = data.p();
  if (split_count < 2) throw InputError("pipeline: the variance split needs at least 2 rows");
  if (split_count + 2 > n) throw InputError("pipeline: split is larger than the sample allows");
  if (top_k < 2 || top_k > p) throw InputError("pipeline: top_k must lie in [2, p]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("pipeline: alpha must lie in (0,1)");

  const Eigen::MatrixXd& x = data.rows();

  // Columns with the largest sample variance, ties broken by column index.
  const Eigen::RowVectorXd means = x.colwise().mean();
  const Eigen::RowVectorXd variances = (x.rowwise() - means).colwise().squaredNorm() / static_cast<double>(n - 1);
  std::vector<Index> order(p);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return variances(static_cast<Eigen::Index>(a)) > variances(static_cast<Eigen::Index>(b));
  });
  order.resize(top_k);

  // Random split by partial Fisher-Yates.
  std::vector<Index> rows(n);
  std::iota(rows.begin(), rows.end(), Index{0});
  for (Index k = 0; k < split_count; ++k) {
    const Index pick = k + static_cast<Index>(rng.below(n - k));
    std::swap(rows[k], rows[pick]);
  }
  std::vector<Index> split(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(split_count));
  std::vector<Index> rest(rows.begin() + static_cast<std::ptrdiff_t>(split_count), rows.end());
  std::sort(split.begin(), split.end());
  std::sort(rest.begin(), rest.end());

  const auto ek = static_cast<Eigen::Index>(top_k);
  Eigen::MatrixXd scaled(static_cast<Eigen::Index>(rest.size()), ek);
  for (Eigen::Index c = 0; c < ek; ++c) {
    const auto col = static_cast<Eigen::Index>(order[static_cast<std::size_t>(c)]);
    double mean = 0.0;
    for (Index r : split) mean += x(static_cast<Eigen::Index>(r), col);
    mean /= static_cast<double>(split_count);
    double ss = 0.0;
    for (Index r : split) {
      const double dlt = x(static_cast<Eigen::Index>(r), col) - mean;
      ss += dlt * dlt;
    }
    const double sd = std::sqrt(ss / static_cast<double>(split_count - 1));
    if (!(sd > 0.0)) throw InputError("pipeline: a selected variable has zero variance on the split");
    for (std::size_t r = 0; r < rest.size(); ++r) {
      const double v = x(static_cast<Eigen::Index>(rest[r]), col);
      scaled(static_cast<Eigen::Index>(r), c) = (center ? v - mean : v) / sd;
    }
  }

  const DataMatrix used(std::move(scaled));
  const SymMatrix s = sample_covariance(used);
  GlassoConfig gc;
  gc.lambda = default_lambda(top_k, used.n());
  GlassoSolution sol = graphical_lasso(s, gc);
  const DesparsifiedEstimate est = desparsify(sol.theta, s);
  EdgeSet edges = threshold_edges(est, used.n(), alpha);
  IntervalTable table = confidence_intervals(est, used.n(), alpha);
  return PipelineResult{std::move(order), std::move(split), used.n(), gc.lambda, std::move(sol), std::move(edges),
                        std::move(table)};
}

}  // namespace dsglasso
