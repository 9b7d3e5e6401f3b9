#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nof1/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "nof1");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = nof1::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nof1_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Keeps the design-identity columns I..power of a design table.
std::string design_columns(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::size_t pos = 0;
    for (int i = 0; i < 7 && pos != std::string::npos; ++i) pos = line.find(',', pos + 1);
    out += line.substr(0, pos) + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("sequences listing") {
  const auto r = run({"sequences", "--scheme", "pairwise", "--K", "4"});
  CHECK(r.code == 0);
  CHECK(r.out == "0,1,0,1\n0,1,1,0\n1,0,0,1\n1,0,1,0\n");
  const auto j = run({"sequences", "--scheme", "pairwise", "--K", "6", "--format", "json"});
  CHECK(j.out.find("\"count\": 8") != std::string::npos);
  CHECK(run({"sequences", "--scheme", "unrestricted", "--K", "20"}).code == 2);
}

TEST_CASE("evaluate the reference design") {
  const auto r = run({"evaluate", "--scheme", "pairwise", "--K", "4", "--J", "8", "--L", "6"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(row.rfind("4,8,4,6,768,", 0) == 0);
  std::vector<std::string> cells;
  std::stringstream ss(row);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  REQUIRE(cells.size() == 12);
  CHECK(std::stod(cells[6]) >= 0.8);
  CHECK(std::stod(cells[10]) < 1.0);
}

TEST_CASE("exit codes") {
  const auto bad = run({"evaluate", "--rho", "1.2"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("residual.correlation") != std::string::npos);

  const auto dir = scratch("exit");
  std::ofstream(dir / "ref.txt") << "0,0,0\n";
  CHECK(run({"evaluate", "--sequences-file", (dir / "ref.txt").string()}).code == 3);

  std::ofstream(dir / "ragged.txt") << "1,0\n1,0,1\n";
  const auto ragged = run({"evaluate", "--sequences-file", (dir / "ragged.txt").string()});
  CHECK(ragged.code == 2);
  CHECK(ragged.err.find("line 2") != std::string::npos);

  CHECK(run({"search", "--value", "3", "--range", "3", "3", "--other-range", "1", "2"}).code == 4);
  CHECK(run({"search", "--fix", "sideways"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"evaluate", "--config", (dir / "missing.json").string()}).code == 2);

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(run({"evaluate", "--config", (dir / "broken.json").string()}).code == 2);
}

TEST_CASE("precedence: flags over file over defaults") {
  const auto dir = scratch("precedence");
  std::ofstream(dir / "c.json") << R"({"design": {"K": 2, "J": 3, "L": 2}, "residual": {"correlation": 0.1}})";
  const auto file_only = run({"evaluate", "--config", (dir / "c.json").string(), "--format", "json"});
  REQUIRE(file_only.code == 0);
  CHECK(file_only.out.find("\"correlation\": 0.1") != std::string::npos);
  CHECK(file_only.out.find("\"variance\": 4.0") != std::string::npos);
  const auto flagged =
      run({"evaluate", "--config", (dir / "c.json").string(), "--rho", "0.3", "--J", "5", "--format", "json"});
  CHECK(flagged.out.find("\"correlation\": 0.3") != std::string::npos);
  CHECK(flagged.out.find("\"J\": 5") != std::string::npos);
  CHECK(flagged.out.find("\"K\": 2") != std::string::npos);
}

TEST_CASE("search writes the reference drill-down") {
  const auto dir = scratch("search");
  const auto r = run({"search", "--fix", "participants", "--value", "32", "--out", dir.string()});
  REQUIRE(r.code == 0);
  for (auto name : {"designs.csv", "curve.csv", "feasible.csv", "individual_se.csv"}) CHECK(fs::exists(dir / name));
  CHECK(slurp(dir / "feasible.csv").find("\n4,8,4,6,768,") != std::string::npos);
  CHECK(slurp(dir / "curve.csv").rfind("x,series,y_min,y_mean,y_max\n", 0) == 0);
}

TEST_CASE("search output is byte-identical across runs") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run({"search", "--out", a.string()}).code == 0);
  REQUIRE(run({"search", "--out", b.string()}).code == 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const auto ja = run({"search", "--format", "json", "--fix", "measurements_per_participant", "--value", "24"});
  const auto jb = run({"search", "--format", "json", "--fix", "measurements_per_participant", "--value", "24"});
  CHECK(ja.code == 0);
  CHECK(ja.out == jb.out);
}

TEST_CASE("sweep over var_intercept leaves designs unchanged") {
  const auto dir = scratch("sweep");
  const auto r = run({"sweep", "--parameter", "var_intercept", "--values", "0", "4", "8", "--cov", "0", "--range", "8",
                      "40", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto t0 = design_columns(slurp(dir / "designs_var_intercept_0.csv"));
  CHECK(t0.size() > 100);
  CHECK(design_columns(slurp(dir / "designs_var_intercept_4.csv")) == t0);
  CHECK(design_columns(slurp(dir / "designs_var_intercept_8.csv")) == t0);
  CHECK(run({"sweep", "--parameter", "var_intercept", "--values", "0"}).code == 2);
}

TEST_CASE("simulate cross-check") {
  const auto r = run({"evaluate", "--scheme", "alternating", "--K", "2", "--J", "2", "--L", "2", "--simulate", "4000",
                      "--seed", "9", "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"sd_delta\"") != std::string::npos);
  const auto again = run({"evaluate", "--scheme", "alternating", "--K", "2", "--J", "2", "--L", "2", "--simulate",
                          "4000", "--seed", "9", "--format", "json"});
  CHECK(again.out == r.out);
}
