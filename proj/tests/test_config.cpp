#include <doctest.h>

#include <sstream>

#include "dsglasso/config.hpp"

using namespace dsglasso;
using nlohmann::json;

namespace {

json base() {
  return json::parse(R"({
    "schema_version": 1, "name": "t", "experiment": "coverage",
    "model": {"kind": "chain", "p": 6, "rho": 0.3},
    "n": 60, "replicates": 2, "alpha": 0.05, "lambda_rule": "sqrt_logp_over_n",
    "methods": ["desparsified", "sample_cov"], "seed": 3
  })");
}

}  // namespace

TEST_CASE("bundled configs parse") {
  for (const char* name : {"coverage_s1", "coverage_s2", "coverage_s3", "scaling", "normality"}) {
    const ExperimentFile f = load_experiment_file(std::string(DSGLASSO_CONFIG_DIR) + "/" + name + ".json");
    CHECK(f.name == name);
    CHECK(f.config.lambda_rule.kind == LambdaRule::Kind::kSqrtLogPOverN);
  }
  const ExperimentFile fig = load_experiment_file(std::string(DSGLASSO_CONFIG_DIR) + "/normality.json");
  CHECK(fig.kind == ExperimentKind::kNormality);
  REQUIRE(fig.entries.size() == 4);
  CHECK(fig.entries[0] == std::pair<Index, Index>{0, 0});
  CHECK(fig.entries[3] == std::pair<Index, Index>{0, 3});
  const ExperimentFile t2 = load_experiment_file(std::string(DSGLASSO_CONFIG_DIR) + "/scaling.json");
  CHECK(t2.kind == ExperimentKind::kScaling);
  CHECK(t2.p_grid == std::vector<Index>{100, 200, 300, 500});
  CHECK_THROWS_AS(load_experiment_file("/nonexistent/x.json"), InputError);
}

TEST_CASE("round trip") {
  const ExperimentFile f = parse_experiment(base());
  CHECK(f.config.model == chain_model(6, 0.3));
  CHECK(f.config.methods == std::vector<Method>{Method::kDesparsified, Method::kSampleCov});
  const ExperimentFile g = parse_experiment(to_json(f));
  CHECK(to_json(g) == to_json(f));
  CHECK(g.config.seed == 3);

  json fixed = base();
  fixed["lambda_rule"] = {{"fixed", 0.25}};
  const ExperimentFile h = parse_experiment(fixed);
  CHECK(h.config.lambda_rule.kind == LambdaRule::Kind::kFixed);
  CHECK(h.config.lambda_rule.value == 0.25);
  CHECK(parse_experiment(to_json(h)).config.lambda_rule == h.config.lambda_rule);

  ModelSpec b;
  b.kind = ModelKind::kBlockDiag;
  b.p = 5;
  b.block_sizes = {2, 3};
  b.block_value = 0.2;
  CHECK(model_from_json(to_json(b)) == b);
}

TEST_CASE("schema violations") {
  auto rejects = [](json j) { CHECK_THROWS_AS(parse_experiment(j), InputError); };
  json j = base();
  j["colour"] = "blue";
  rejects(j);
  j = base();
  j["schema_version"] = 2;
  rejects(j);
  j = base();
  j.erase("schema_version");
  rejects(j);
  j = base();
  j["methods"] = {"bootstrap"};
  rejects(j);
  j = base();
  j["experiment"] = "other";
  rejects(j);
  j = base();
  j["n"] = "many";
  rejects(j);
  j = base();
  j["model"]["extra"] = 1;
  rejects(j);
  j = base();
  j["lambda_rule"] = "cv";
  rejects(j);
  j = base();
  j["experiment"] = "normality";
  j["entries"] = {{0, 1}};
  rejects(j);
  j["entries"] = {{1, 7}};
  rejects(j);
  try {
    json bad = base();
    bad["colour"] = 1;
    parse_experiment(bad);
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("config schema error") != std::string::npos);
  }
}

TEST_CASE("report writers") {
  ExperimentFile f = parse_experiment(base());
  f.config.threads = 1;
  const CoverageReport r = run_coverage(f.config);
  std::ostringstream csv;
  write_coverage_csv(csv, r);
  CHECK(csv.str().rfind("method,avgcov_S,avglength_S,avgcov_Sc,avglength_Sc\n", 0) == 0);
  CHECK(csv.str().find("\ndesparsified,") != std::string::npos);
  const json j = to_json(r);
  CHECK(!j.contains("runtime_seconds"));
  CHECK(j.dump() == to_json(run_coverage(f.config)).dump());
  std::ostringstream table;
  print_coverage_table(table, r);
  CHECK(table.str().find("Sample covariance") != std::string::npos);

  Histogram h = make_histogram({0.1, 0.2}, 4, -1.0, 1.0);
  std::ostringstream hist;
  write_histogram_csv(hist, h);
  CHECK(hist.str() == "bin_left,bin_right,count\n-1,-0.5,0\n-0.5,0,0\n0,0.5,2\n0.5,1,0\n");
}
