#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kSource = TORIC_FLOW_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("toric_flow_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TORIC_FLOW_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const fs::path& p) {
  Table rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("simulate free flat motion") {
  const fs::path out = scratch("free");
  REQUIRE(run("simulate --config " + kSource + "/scenarios/free_flat.json --out " + out.string(),
              out.string() + ".log") == 0);
  const Table t = read_csv(out / "trajectory.csv");
  REQUIRE(t.size() == 52);
  CHECK(t[0] == std::vector<std::string>{"t", "x_1", "x_2", "s", "p_1", "p_2", "p_s", "H_drift"});
  constexpr double kTau = 2.0 * std::numbers::pi;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double time = std::stod(t[i][0]);
    CHECK(time == doctest::Approx(0.1 * (i - 1)).epsilon(1e-12));
    CHECK(std::abs(std::stod(t[i][3]) - time) < 1e-12);
    const double dx1 = std::remainder(std::stod(t[i][1]) - 0.1 - 0.3 * time, kTau);
    const double dx2 = std::remainder(std::stod(t[i][2]) - 0.2 + 0.4 * time, kTau);
    CHECK(std::abs(dx1) < 1e-12);
    CHECK(std::abs(dx2) < 1e-12);
    CHECK(std::abs(std::stod(t[i][7])) < 1e-12);
  }
}

TEST_CASE("poincare on the p = 0 band scenario returns to the start") {
  const fs::path out = scratch("remark1");
  const fs::path log = out.string() + ".log";
  REQUIRE(run("poincare --config " + kSource + "/scenarios/remark1.json --out " + out.string(), log) == 0);
  const std::string text = slurp(log);
  const std::string key = "identity: max deviation ";
  const auto at = text.find(key);
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(text.substr(at + key.size())) < 1e-6);
  const Table t = read_csv(out / "crossings.csv");
  CHECK(t.size() >= 3);
  CHECK(t[0][0] == "index");
}

TEST_CASE("reduce and extrema write their tables") {
  const fs::path out = scratch("reduce");
  const std::string cfg = " --config " + kSource + "/scenarios/singular_leaf.json --out " + out.string();
  REQUIRE(run("reduce" + cfg, out.string() + ".log") == 0);
  const Table leaf = read_csv(out / "leaf.csv");
  REQUIRE(leaf.size() == 2);
  CHECK(leaf[1][0] == "singular_flat");
  REQUIRE(run("extrema" + cfg, out.string() + ".log") == 0);
  const Table ext = read_csv(out / "extrema.csv");
  REQUIRE(ext.size() >= 3);
  CHECK(ext[0] == std::vector<std::string>{"kind", "value", "s"});
}

TEST_CASE("exit codes") {
  const fs::path out = scratch("codes");
  const fs::path log = out.string() + ".log";
  CHECK(run("simulate --config " + kSource + "/tests/data/bad_suspension.json --out " + out.string(), log) == 2);
  CHECK(run("simulate --config /nonexistent.json --out " + out.string(), log) == 2);
  CHECK(run("simulate --out " + out.string(), log) == 2);
  CHECK(run("verify --config " + kSource + "/tests/data/coarse_dt.json --out " + out.string(), log) == 1);
  CHECK(slurp(log).find("energy_conservation") != std::string::npos);
  CHECK(run("verify --config " + kSource + "/scenarios/remark1.json --out " + out.string(), log) == 0);
}

TEST_CASE("scan-entropy classifies and is thread-count independent") {
  const std::string cfg = " --config " + kSource + "/tests/data/small_scan.json";
  const fs::path one = scratch("scan1"), eight = scratch("scan8");
  REQUIRE(run("scan-entropy" + cfg + " --threads 1 --out " + one.string(), one.string() + ".log") == 0);
  REQUIRE(run("scan-entropy" + cfg + " --threads 8 --out " + eight.string(), eight.string() + ".log") == 0);
  const std::string a = slurp(one / "scan.csv");
  CHECK(a == slurp(eight / "scan.csv"));
  const Table t = read_csv(one / "scan.csv");
  REQUIRE(t.size() == 9);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double h = std::stod(t[i][0]);
    CAPTURE(h);
    if (h < -1.0) CHECK(t[i][4] == "empty");
    else if (h < 1.0) CHECK(t[i][4] == "zero");
    else CHECK(t[i][4] == "positive");
    CHECK(t[i][7] == "11");
  }
  const fs::path other = scratch("scan_seed");
  REQUIRE(run("scan-entropy" + cfg + " --seed 12 --out " + other.string(), other.string() + ".log") == 0);
  CHECK(slurp(other / "scan.csv") != a);
}
