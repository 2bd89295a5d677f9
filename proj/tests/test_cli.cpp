#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "covkit/error.hpp"
#include "covkit/io.hpp"
#include "covkit/pipeline.hpp"

using namespace covkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("covkit_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Outcome {
  int code;
  std::string err;
};

Outcome run_cli(const std::string& args, const fs::path& dir) {
  const auto err_file = dir / "stderr.txt";
  const std::string cmd = std::string(COVKIT_CLI) + " " + args + " > " +
                          (dir / "stdout.txt").string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, io::read_text(err_file)};
}

json read_json(const fs::path& p) { return json::parse(io::read_text(p)); }

void write_json(const fs::path& p, const json& j) { io::write_text(p, j.dump(2)); }

const json kQuadratic = {{"model", "quadratic"},
                         {"quadratic",
                          {{"A", {{4.0, 1.0, 0.5}, {1.0, 3.0, 0.2}, {0.5, 0.2, 2.0}}},
                           {"b", {1.0, -2.0, 0.5}},
                           {"c", 1.5}}}};

Matrix quadratic_a() {
  Matrix a(3, 3);
  a << 4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0;
  return a;
}

}  // namespace

TEST_CASE("hessian run on a quadratic writes the exact inverse") {
  TempDir dir;
  write_json(dir.path / "cfg.json", kQuadratic);
  const auto out = dir.path / "out";
  const auto r = run_cli("hessian --config " + (dir.path / "cfg.json").string() + " --out " + out.string(), dir.path);
  REQUIRE(r.code == 0);
  const Matrix v = io::matrix_from_json(read_json(out / "covariance.json")["covariance"]);
  CHECK((v - quadratic_a().inverse()).cwiseAbs().maxCoeff() < 1e-9);
  const Matrix h = io::matrix_from_json(read_json(out / "hessian.json")["hessian"]);
  CHECK((h - quadratic_a()).cwiseAbs().maxCoeff() < 1e-9);
  const auto rep = read_json(out / "report.json");
  CHECK(rep["mode"] == "hessian");
  CHECK(rep["metrics"]["F"].get<double>() < 1e-9);
}

TEST_CASE("configuration errors exit with code 2 and a JSON message") {
  TempDir dir;
  json cfg = kQuadratic;
  cfg["unexpected"] = 1;
  write_json(dir.path / "cfg.json", cfg);
  const auto r = run_cli("hessian --config " + (dir.path / "cfg.json").string(), dir.path);
  CHECK(r.code == 2);
  const auto err = json::parse(r.err);
  CHECK(err["error"] == "ConfigError");
  CHECK(err["exit_code"] == 2);
  CHECK(err["message"].get<std::string>().find("unexpected") != std::string::npos);

  CHECK(run_cli("hessian", dir.path).code == 2);
  CHECK(run_cli("hessian --config " + (dir.path / "nope.json").string(), dir.path).code == 2);
  CHECK(run_cli("hessian --config " + (dir.path / "cfg.json").string() + " --method fancy", dir.path).code == 2);
}

TEST_CASE("missing data exits with code 3") {
  TempDir dir;
  write_json(dir.path / "cfg.json", {{"model", "normal"}, {"data", "absent.csv"}});
  const auto r = run_cli("hessian --config " + (dir.path / "cfg.json").string() + " --out " + dir.path.string(), dir.path);
  CHECK(r.code == 3);
  const auto err = json::parse(r.err);
  CHECK(err["error"] == "DataError");
  CHECK(err["exit_code"] == 3);
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for(ErrorKind::ConfigError) == 2);
  CHECK(exit_code_for(ErrorKind::DataError) == 3);
  CHECK(exit_code_for(ErrorKind::AllWeightsZero) == 5);
  for (auto k : {ErrorKind::FlatDirection, ErrorKind::NonFiniteValue, ErrorKind::LostPrecision,
                 ErrorKind::NoConvergence, ErrorKind::NotPositiveDefinite,
                 ErrorKind::DegenerateHessian, ErrorKind::InsufficientBatches}) {
    CHECK(exit_code_for(k) == 4);
  }
}

TEST_CASE("posterior on a quadratic recovers the mode and covariance") {
  TempDir dir;
  json cfg = kQuadratic;
  cfg["posterior"] = {{"batches", 3}, {"batch_size", 2000}};
  cfg["seed"] = 5;
  write_json(dir.path / "cfg.json", cfg);
  const auto out = dir.path / "out";
  const auto r = run_cli("posterior --config " + (dir.path / "cfg.json").string() + " --out " + out.string(), dir.path);
  REQUIRE(r.code == 0);
  const auto post = read_json(out / "posterior.json");
  const Vector theta_hat = io::vector_from_json(post["theta_hat"]);
  const Vector theta_tilde = io::vector_from_json(post["theta_tilde"]);
  CHECK((theta_tilde - theta_hat).cwiseAbs().maxCoeff() < 1e-10);
  const Matrix v = io::matrix_from_json(post["covariance"]);
  const Matrix vt = io::matrix_from_json(post["v_tilde"]);
  const Matrix ve = io::matrix_from_json(post["v_error"]);
  CHECK(((vt - v).cwiseAbs().array() <= 3.0 * ve.array() + 1e-12).all());
  CHECK(post["evaluations"] == 2 * 3 * 2000);
  CHECK(post["batches"].size() == 3);
  CHECK(post["batches"][0]["nu"] == 4);
}

TEST_CASE("normal posterior from a data file next to the config") {
  TempDir dir;
  io::write_normal_csv(dir.path / "x.csv", {0.3, -1.2, 0.8, 1.9, -0.4, 0.1, 2.2, -0.9, 0.6, 1.1});
  write_json(dir.path / "cfg.json", {{"model", "normal"},
                                     {"data", "x.csv"},
                                     {"method", "polish"},
                                     {"posterior", {{"batches", 2}, {"batch_size", 1000}}}});
  const auto out = dir.path / "out";
  const auto r = run_cli("posterior --config " + (dir.path / "cfg.json").string() + " --out " + out.string(), dir.path);
  REQUIRE(r.code == 0);
  const auto post = read_json(out / "posterior.json");
  CHECK(post["functionals"].contains("sigma2"));
  CHECK(post["functionals"]["sigma2"]["mean"].get<double>() > 0.0);
}

TEST_CASE("benchmark output parses back and reruns are byte-identical") {
  TempDir dir;
  write_json(dir.path / "cfg.json", {{"model", "po"}, {"synth", {{"n", 300}, {"seed", 4}}}});
  const auto a = dir.path / "a", b = dir.path / "b";
  const std::string base = "benchmark --config " + (dir.path / "cfg.json").string();
  REQUIRE(run_cli(base + " --out " + a.string(), dir.path).code == 0);
  REQUIRE(run_cli(base + " --out " + b.string() + " --threads 3", dir.path).code == 0);

  const auto rows = io::read_report_csv(a / "benchmark.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].method == "standard");
  CHECK(rows[1].method == "polish");
  CHECK(rows[2].method == "quick");
  CHECK(rows[2].evaluations < rows[0].evaluations);

  CHECK(io::read_text(a / "data.csv") == io::read_text(b / "data.csv"));
  auto ra = read_json(a / "report.json"), rb = read_json(b / "report.json");
  ra.erase("time_seconds");
  rb.erase("time_seconds");
  CHECK(ra == rb);
  auto rows_b = io::read_report_csv(b / "benchmark.csv");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto x = rows[i], y = rows_b[i];
    x.time_seconds = y.time_seconds = 0.0;
    CHECK(io::format_report_csv({x}) == io::format_report_csv({y}));
  }
}

TEST_CASE("command-line overrides take precedence over the config") {
  TempDir dir;
  json cfg = kQuadratic;
  cfg["method"] = "standard";
  write_json(dir.path / "cfg.json", cfg);
  const auto out = dir.path / "out";
  REQUIRE(run_cli("hessian --config " + (dir.path / "cfg.json").string() + " --method quick --out " + out.string(), dir.path).code == 0);
  CHECK(read_json(out / "report.json")["method"] == "quick");
  CHECK(read_json(out / "hessian.json")["method"] == "quick");
}
