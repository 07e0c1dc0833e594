#include "doctest.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "factorcv/cli.hpp"
#include "factorcv/harness.hpp"
#include "factorcv/ingest.hpp"
#include "factorcv/simgen.hpp"
#include "oracles.hpp"

using namespace factorcv;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "factorcv_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string write_matrix(const std::string& name, const Eigen::MatrixXd& X) {
  const auto path = scratch(name);
  std::ofstream f(path);
  PanelMatrix pm{X, {}};
  write_matrix_csv(pm, f);
  return path.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string write_text(const std::string& name, const std::string& text) {
  const auto path = scratch(name);
  std::ofstream(path) << text;
  return path.string();
}

std::string returns_file() {
  using namespace std::chrono;
  std::vector<Date> dates;
  for (sys_days d{Date{year{2000}, July, day{1}}}; d <= sys_days{Date{year{2002}, June, day{30}}};
       d += days{1})
    if (weekday{d} != Saturday && weekday{d} != Sunday) dates.emplace_back(d);
  SimConfig cfg;
  cfg.n = static_cast<Eigen::Index>(dates.size());
  cfg.p = 25;
  cfg.d0 = 3;
  cfg.theta = 0.5;
  cfg.seed = 11;
  ReturnsPanel panel;
  panel.dates = dates;
  for (int s = 0; s < 25; ++s) panel.columns.push_back("P" + std::to_string(s + 1));
  panel.values = gen_factor_data(cfg).X;
  const auto path = scratch("returns.csv");
  std::ofstream f(path);
  write_returns_csv(panel, f);
  return path.string();
}

}  // namespace

TEST_CASE("select on exact rank three data") {
  const Eigen::MatrixXd X = oracle::normal_matrix(40, 3, 1) * oracle::normal_matrix(30, 3, 2).transpose();
  const auto path = write_matrix("rank3.csv", X);
  const auto r = run({"select", "--input", path, "--dmax", "8"});
  CHECK(r.code == 0);
  CHECK(r.out.find("DCV selects 3; IC1 selects 3") != std::string::npos);
  CHECK(r.out.find("fold_seed=") != std::string::npos);
}

TEST_CASE("select validates d_max up front") {
  const auto path = write_matrix("small.csv", oracle::normal_matrix(20, 6, 3));
  const auto r = run({"select", "--input", path, "--dmax", "6"});
  CHECK(r.code == 2);
  CHECK(r.err.find("d_max must be < p") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("select output is reproducible across runs and thread counts") {
  const auto path = write_matrix("noisy.csv", oracle::normal_matrix(50, 12, 4));
  const auto a = run({"--seed", "5", "select", "--input", path, "--dmax", "6"});
  const auto b = run({"--seed", "5", "select", "--input", path, "--dmax", "6"});
  const auto c = run({"--seed", "5", "--threads", "3", "select", "--input", path, "--dmax", "6"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  const auto d = run({"--seed", "6", "select", "--input", path, "--dmax", "6"});
  CHECK(a.out != d.out);
}

TEST_CASE("select preprocessing and file output") {
  const auto path = write_matrix("pre.csv", oracle::normal_matrix(30, 8, 5));
  const auto out = scratch("select.json");
  const auto r = run({"--output", out.string(), "--format", "json", "select", "--input", path,
                      "--dmax", "4", "--standardize", "--transpose", "never", "--k", "5"});
  CHECK(r.code == 0);
  const auto text = slurp(out);
  CHECK(text.find("\"dcv_selected\"") != std::string::npos);
  CHECK(run({"select", "--input", path, "--center", "--dmax", "3"}).code == 0);
}

TEST_CASE("select reports numerical failures with their location") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(20, 3);
  const auto Z = oracle::normal_matrix(20, 3, 5);
  for (Eigen::Index i = 0; i < 10; ++i) X(i, 0) = 10 * Z(i, 0);
  for (Eigen::Index i = 10; i < 20; ++i) X.row(i).tail(2) = Z.row(i).tail(2);
  const auto path = write_matrix("saturated.csv", X);
  const auto r = run({"select", "--input", path, "--dmax", "2", "--k", "4"});
  CHECK(r.code == 1);
  CHECK(r.err.find("fold ") != std::string::npos);
  CHECK(r.err.find("d=1") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"select"}).code == 2);
  CHECK(run({"select", "--input", "/nonexistent.csv"}).code == 2);
  CHECK(run({"select", "--input", "x.csv", "--bogus"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--format", "xml", "select", "--input", "x.csv"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("simulate smoke run") {
  const auto out = scratch("smoke.csv");
  const auto spec = write_text("smoke.json", R"({
    "name": "smoke", "n": [40], "p": [30], "error_models": ["E1"], "theta": [1],
    "methods": ["DCV1", "DCV10", "IC1"], "replications": 1, "d_min": 1, "d_max": 8,
    "master_seed": 3})");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run({"--output", out.string(), "simulate", "--spec", spec});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(r.code == 0);
  CHECK(secs < 10);
  CHECK(r.out.find("cell_seed=") != std::string::npos);
  CHECK(r.out.find("\"master_seed\": 3") != std::string::npos);
  std::ifstream f(out);
  CHECK(check_results_csv(f).empty());
}

TEST_CASE("simulate output is identical across thread counts") {
  const auto spec = write_text("det.json", R"({
    "n": [40], "p": [30], "error_models": ["E1", "E2"], "theta": [1, 4],
    "methods": ["DCV10", "IC1"], "replications": 3, "master_seed": 1})");
  const auto path = scratch("det.out.json").string();
  const auto a = run({"--threads", "1", "--output", path, "--format", "json", "--no-timing",
                      "simulate", "--spec", spec});
  const auto first = slurp(path);
  const auto b = run({"--threads", "4", "--output", path, "--format", "json", "--no-timing",
                      "simulate", "--spec", spec});
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(first == slurp(path));
  CHECK(a.out == b.out);
}

TEST_CASE("simulate seed override") {
  const auto spec = write_text("seed.json", R"({
    "n": [40], "p": [30], "theta": [1], "methods": ["IC1"], "replications": 1, "master_seed": 1})");
  const auto r = run({"--seed", "99", "simulate", "--spec", spec});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"master_seed\": 99") != std::string::npos);
}

TEST_CASE("simulate errors") {
  CHECK(run({"simulate", "--spec", "/nonexistent/spec.json"}).code == 2);
  CHECK(run({"simulate"}).code == 2);
  const auto bad = write_text("bad.json", R"({"n": [40], "p": [30], "methods": ["IC1"], "d_max": 40})");
  CHECK(run({"simulate", "--spec", bad}).code == 2);
}

TEST_CASE("empirical run") {
  const auto input = returns_file();
  const auto out = scratch("empirical.csv");
  const auto r = run({"--output", out.string(), "empirical", "--input", input, "--years", "1",
                      "--methods", "DCV10,IC1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("# window 20000701") != std::string::npos);
  std::ifstream f(out);
  CHECK(check_results_csv(f).empty());
  std::ifstream g(out);
  const auto s = read_csv(g);
  REQUIRE(s.cells.size() == 2);
  CHECK(s.cells[0].frequency(3) == 1.0);

  const auto again = run({"--output", out.string(), "--threads", "2", "empirical", "--input",
                          input, "--years", "1", "--methods", "DCV10,IC1"});
  CHECK(again.out == r.out);
}

TEST_CASE("empirical argument checks") {
  const auto input = returns_file();
  CHECK(run({"empirical", "--input", input, "--years", "4"}).code == 2);
  CHECK(run({"empirical", "--input", input, "--years", "0"}).code == 2);
  CHECK(run({"empirical", "--input", input, "--years", "1", "--dmax", "25"}).code == 2);
  CHECK(run({"empirical", "--input", input, "--years", "1", "--methods", "XYZ"}).code == 2);
  CHECK(run({"empirical", "--input", input, "--years", "3"}).code == 2);
}

TEST_CASE("bundled presets are valid") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(FACTORCV_PRESET_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    CAPTURE(entry.path().string());
    const auto spec = load_experiment_spec(entry.path().string());
    CHECK_NOTHROW(validate(spec));
  }
  CHECK(seen >= 6);
}
