#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "covkit/error.hpp"
#include "covkit/io.hpp"

using namespace covkit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("covkit_io_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_raw(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected covkit::Error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("proportional-odds CSV round trip is lossless") {
  TempDir dir;
  const auto data = synthesize_po(po_default_truth(), 40, 2);
  io::write_po_csv(dir.path / "po.csv", data);
  const auto back = io::read_po_csv(dir.path / "po.csv");
  CHECK(back.covariates == data.covariates);
  CHECK(back.groups == data.groups);
}

TEST_CASE("basketball CSV round trip keeps team order") {
  TempDir dir;
  const auto data = synthesize_basketball(basketball_default_truth(5, 1), 5, 30, 1);
  io::write_basketball_csv(dir.path / "bb.csv", data);
  const auto back = io::read_basketball_csv(dir.path / "bb.csv");
  REQUIRE(back.games.size() == data.games.size());
  CHECK(back.n_teams == data.n_teams);
  // Indices may be relabelled, names and scores may not.
  for (std::size_t i = 0; i < data.games.size(); ++i) {
    const auto& g = data.games[i];
    const auto& h = back.games[i];
    CHECK(back.team_names[h.team1] == data.team_names[g.team1]);
    CHECK(back.team_names[h.team2] == data.team_names[g.team2]);
    CHECK(h.score1 == g.score1);
    CHECK(h.score2 == g.score2);
    CHECK(h.home == g.home);
  }
}

TEST_CASE("basketball teams are indexed by first appearance") {
  TempDir dir;
  write_raw(dir.path / "bb.csv",
            "team1,team2,score1,score2,home\nLions,Bears,80,75,1\nBears,Owls,70,71,0\n");
  const auto d = io::read_basketball_csv(dir.path / "bb.csv");
  CHECK(d.n_teams == 3);
  REQUIRE(d.team_names.size() == 3);
  CHECK(d.team_names[0] == "Lions");
  CHECK(d.games[1].team1 == 1);
  CHECK(d.games[1].team2 == 2);
  CHECK(d.games[0].home);
  CHECK_FALSE(d.games[1].home);
  CHECK(d.games[0].score1 == 80.0);
}

TEST_CASE("normal CSV round trip is lossless") {
  TempDir dir;
  const auto x = synthesize_normal(0.1, 3.0, 25, 4);
  io::write_normal_csv(dir.path / "x.csv", x);
  CHECK(io::read_normal_csv(dir.path / "x.csv") == x);
}

TEST_CASE("malformed data files raise data errors with a location") {
  TempDir dir;
  const auto p = dir.path / "bad.csv";
  write_raw(p, "x\n1.0\nnot-a-number\n");
  try {
    io::read_normal_csv(p);
    FAIL("expected DataError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DataError);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  write_raw(p, "a,b,group\n1,2,4\n");
  CHECK(kind_of([&] { io::read_po_csv(p); }) == ErrorKind::DataError);
  write_raw(p, "a,b\n1,2\n");
  CHECK(kind_of([&] { io::read_po_csv(p); }) == ErrorKind::DataError);
  write_raw(p, "team1,team2,score1\nA,B,1\n");
  CHECK(kind_of([&] { io::read_basketball_csv(p); }) == ErrorKind::DataError);
  CHECK(kind_of([&] { io::read_normal_csv(dir.path / "missing.csv"); }) == ErrorKind::DataError);
}

TEST_CASE("JSON vectors and matrices round trip exactly") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  Matrix m(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = nd(gen) * std::pow(10.0, j * 5 - 8);
  const auto jm = io::to_json(m);
  CHECK(jm["n"] == 3);
  CHECK(jm["m"] == 4);
  CHECK(jm["values"][1] == m(0, 1));
  CHECK(io::matrix_from_json(io::json::parse(jm.dump())) == m);

  Vector v(3);
  v << 1.0 / 3.0, -2e-300, 7e12;
  CHECK(io::vector_from_json(io::json::parse(io::to_json(v).dump())) == v);

  io::json bad = {{"n", 2}, {"m", 2}, {"values", {1, 2, 3}}};
  CHECK_THROWS_AS(io::matrix_from_json(bad), Error);
}

TEST_CASE("report CSV round trip is lossless") {
  std::vector<ComparisonReport> rows = {
      {"standard", 1.0 / 3.0, 2.5e-9, 1.234567890123e-8, 0.125, 1037},
      {"polish", 0.0, 1e-300, 5.6e-7, 12.0, 1243},
      {"quick", 3.14, 0.0624, 0.0118, 1e-3, 628},
  };
  const auto text = io::format_report_csv(rows);
  CHECK(text.rfind("method,F,corr_F,G,time_seconds,evaluations\n", 0) == 0);
  const auto back = io::parse_report_csv(text);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].method == rows[i].method);
    CHECK(back[i].frobenius_hessian == rows[i].frobenius_hessian);
    CHECK(back[i].frobenius_corr == rows[i].frobenius_corr);
    CHECK(back[i].g_pct == rows[i].g_pct);
    CHECK(back[i].time_seconds == rows[i].time_seconds);
    CHECK(back[i].evaluations == rows[i].evaluations);
  }
  TempDir dir;
  io::write_report_csv(dir.path / "r.csv", rows);
  CHECK(io::format_report_csv(io::read_report_csv(dir.path / "r.csv")) == text);
}
