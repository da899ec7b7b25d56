#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsglasso/core.hpp"
#include "dsglasso/csv.hpp"
#include "dsglasso/models.hpp"

namespace fs = std::filesystem;
using namespace dsglasso;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dsglasso_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + DSGLASSO_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void write_chain_data(const fs::path& p, Index dim, Index n, std::uint64_t seed) {
  const TrueModel m = make_precision(chain_model(dim, 0.3));
  SeededRng rng(seed, 0);
  std::ofstream out(p, std::ios::binary);
  csv::write_matrix(out, sample_gaussian(m.theta, n, rng).rows());
}

}  // namespace

TEST_CASE("help and unknown flags") {
  CHECK(run("--help") == 0);
  CHECK(run("estimate --help") == 0);
  CHECK(run("estimate --bogus 1") == 2);
  CHECK(run("no-such-command") == 2);
}

TEST_CASE("identity covariance estimates the identity") {
  const fs::path dir = scratch("identity");
  write(dir / "s.csv", "1,0,0\n0,1,0\n0,0,1\n");
  REQUIRE(run("estimate --input " + (dir / "s.csv").string() + " --input-kind covariance --lambda 0.1 --out-dir " +
              (dir / "out").string()) == 0);
  const Eigen::MatrixXd theta = csv::read_matrix_file((dir / "out" / "theta.csv").string());
  CHECK(theta == Eigen::MatrixXd::Identity(3, 3));
  const auto meta = nlohmann::json::parse(slurp(dir / "out" / "metadata.json"));
  CHECK(meta.at("converged") == true);
  CHECK(meta.at("p") == 3);
}

TEST_CASE("chain data estimate, infer and edges") {
  const fs::path dir = scratch("chain");
  write_chain_data(dir / "x.csv", 10, 200, 4);
  const std::string in = " --input " + (dir / "x.csv").string();
  REQUIRE(run("estimate" + in + " --out-dir " + (dir / "e").string()) == 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "e" / "metadata.json"));
  CHECK(meta.at("kkt_residual").get<double>() <= 1e-6);
  CHECK(meta.at("n") == 200);
  CHECK(meta.at("lambda").get<double>() == doctest::Approx(std::sqrt(std::log(10.0) / 200.0)));

  REQUIRE(run("infer" + in + " --alpha 0.1 --out-dir " + (dir / "i").string()) == 0);
  for (const char* f : {"theta.csv", "t_hat.csv", "intervals.csv", "intervals.json", "metadata.json"})
    CHECK(fs::exists(dir / "i" / f));
  CHECK(slurp(dir / "i" / "intervals.csv").rfind("i,j,t_hat,sigma_hat,lo,hi\n", 0) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "i" / "intervals.json")).at("intervals").size() == 55);

  REQUIRE(run("edges" + in + " --out-dir " + (dir / "g").string()) == 0);
  CHECK(slurp(dir / "g" / "edges.csv").rfind("i,j,t_hat,sigma_hat,threshold\n", 0) == 0);
}

TEST_CASE("malformed input leaves no output") {
  const fs::path dir = scratch("malformed");
  write(dir / "bad.csv", "1,2\n3,x\n");
  CHECK(run("estimate --input " + (dir / "bad.csv").string() + " --out-dir " + (dir / "out").string()) == 2);
  CHECK(!fs::exists(dir / "out"));
  write(dir / "ragged.csv", "1,2\n3\n");
  CHECK(run("estimate --input " + (dir / "ragged.csv").string() + " --out-dir " + (dir / "out").string()) == 2);
  CHECK(run("estimate --input " + (dir / "missing.csv").string() + " --out-dir " + (dir / "out").string()) == 2);
  write(dir / "s.csv", "1,0\n0,1\n");
  CHECK(run("estimate --input " + (dir / "s.csv").string() + " --input-kind covariance --lambda auto --out-dir " +
            (dir / "out").string()) == 2);
  CHECK(run("infer --input " + (dir / "s.csv").string() + " --input-kind covariance --lambda 0.1 --n 50 --alpha 2 " +
            "--out-dir " + (dir / "out").string()) == 2);
  CHECK(!fs::exists(dir / "out"));
}

TEST_CASE("non-convergence writes partial output and exits 3") {
  const fs::path dir = scratch("noconv");
  write_chain_data(dir / "x.csv", 30, 60, 2);
  CHECK(run("estimate --input " + (dir / "x.csv").string() + " --lambda 0.05 --max-iter 1 --out-dir " +
            (dir / "out").string()) == 3);
  REQUIRE(fs::exists(dir / "out" / "metadata.json"));
  CHECK(nlohmann::json::parse(slurp(dir / "out" / "metadata.json")).at("converged") == false);
  CHECK(fs::exists(dir / "out" / "theta.csv"));
}

TEST_CASE("diagnose") {
  const fs::path dir = scratch("diagnose");
  REQUIRE(run("diagnose --model chain --p 4 --rho 0.3 --n 500 --out-dir " + (dir / "c").string()) == 0);
  const auto c = nlohmann::json::parse(slurp(dir / "c" / "report.json"));
  CHECK(c.at("s") == 10);
  CHECK(c.at("d") == 3);
  REQUIRE(run("diagnose --model diagonal --p 5 --out-dir " + (dir / "d").string()) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "d" / "report.json")).at("alpha_irrep") == 1.0);
  CHECK(run("diagnose --model chain --p 4 --rho 0.9 --out-dir " + (dir / "x").string()) == 2);
  CHECK(run("diagnose --model chain --p 2 --rho 0.99999999 --out-dir " + (dir / "s").string()) == 4);
  CHECK(run("diagnose --model wavelet --p 4") == 2);
}

TEST_CASE("config errors") {
  const fs::path dir = scratch("config");
  write(dir / "bad.json", R"({"schema_version": 1, "name": "x", "experiment": "coverage",
    "model": {"kind": "chain", "p": 5, "rho": 0.3}, "n": 50, "replicates": 2, "alpha": 0.05,
    "lambda_rule": "sqrt_logp_over_n", "methods": ["jackknife"], "seed": 1})");
  CHECK(run("coverage --config " + (dir / "bad.json").string() + " --out-dir " + (dir / "out").string()) == 2);
  CHECK(!fs::exists(dir / "out"));
}

TEST_CASE("coverage outputs are byte-identical across runs") {
  const fs::path dir = scratch("determinism");
  write(dir / "c.json", R"({"schema_version": 1, "name": "small", "experiment": "coverage",
    "model": {"kind": "chain", "p": 8, "rho": 0.3}, "n": 80, "replicates": 3, "alpha": 0.05,
    "lambda_rule": "sqrt_logp_over_n", "methods": ["desparsified", "oracle_mle", "post_selection_mle", "sample_cov"],
    "seed": 5})");
  REQUIRE(run("coverage --config " + (dir / "c.json").string() + " --out-dir " + (dir / "a").string()) == 0);
  REQUIRE(run("coverage --config " + (dir / "c.json").string() + " --threads 2 --out-dir " + (dir / "b").string()) ==
          0);
  for (const char* f : {"coverage.csv", "coverage.json", "table.txt"}) {
    CHECK(!slurp(dir / "a" / f).empty());
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
}

TEST_CASE("pipeline") {
  const fs::path dir = scratch("pipeline");
  write_chain_data(dir / "x.csv", 12, 400, 9);
  REQUIRE(run("pipeline --input " + (dir / "x.csv").string() + " --split 10 --out-dir " + (dir / "out").string()) == 0);
  for (const char* f : {"edges.csv", "intervals.csv", "metadata.json"}) CHECK(fs::exists(dir / "out" / f));
  CHECK(run("pipeline --input " + (dir / "x.csv").string() + " --split 1 --out-dir " + (dir / "bad").string()) == 2);
}
