#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vlcsim/config.hpp"
#include "vlcsim/channel.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = VLCSIM_BIN;
const std::string kConfigs = VLCSIM_CONFIGS;

int sh(const std::string& args) {
  const int st = std::system((kBin + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vlcsim_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, ValidateDefault) {
  EXPECT_EQ(sh("validate --config " + kConfigs + "/default.ini"), 0);
  EXPECT_EQ(sh("validate"), 0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(sh(""), 2);
  EXPECT_EQ(sh("frobnicate"), 2);
  EXPECT_EQ(sh("map --kind spectrum"), 2);
  EXPECT_EQ(sh("map --config /nonexistent.ini"), 2);
  EXPECT_EQ(sh("--help"), 0);
}

TEST(Cli, ConfigErrors) {
  EXPECT_EQ(sh("validate --set room.bogus=1"), 2);
  EXPECT_EQ(sh("validate --set simulation.duration_s=-1"), 2);
  EXPECT_EQ(sh("simulate --set device1.waypoints=\"0 0; 9 9\" --out /tmp"), 2);
}

TEST(Cli, PowerMapGrid) {
  const fs::path out = fresh_dir("map");
  ASSERT_EQ(sh("map --kind power --step 0.25 --out " + out.string()), 0);
  std::ifstream in(out / "power_map.csv");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("# config_hash=", 0), 0u);
  in.seekg(0);
  const vlcsim::GridMap g = vlcsim::read_grid_csv(in);
  EXPECT_EQ(g.nx, 49u);
  EXPECT_EQ(g.ny, 49u);
  fs::remove_all(out);
}

TEST(Cli, IlluminanceCompliance) {
  const fs::path out = fresh_dir("lux");
  ASSERT_EQ(sh("map --kind illuminance --out " + out.string()), 0);
  const std::string report = slurp(out / "illuminance_compliance.txt");
  EXPECT_NE(report.find("in_band_fraction=1\n"), std::string::npos) << report;
  EXPECT_TRUE(fs::exists(out / "illuminance_map.csv"));
  fs::remove_all(out);
}

TEST(Cli, DatabaseCentreCell) {
  const fs::path out = fresh_dir("db");
  ASSERT_EQ(sh("database --step 0.5 --out " + out.string()), 0);
  std::ifstream in(out / "database.csv");
  const vlcsim::GridMap g = vlcsim::read_grid_csv(in);
  const auto [i, j] = g.nearest({0, 0});
  EXPECT_EQ(g.at(i, j), 9.0);
  fs::remove_all(out);
}

TEST(Cli, CompareStraightWalk) {
  const fs::path out = fresh_dir("cmp");
  ASSERT_EQ(sh("compare --config " + kConfigs + "/straight_walk.ini --out " + out.string()), 0);
  std::istringstream csv(slurp(out / "comparison.csv"));
  std::string line;
  bool found = false;
  while (std::getline(csv, line)) {
    if (line.rfind("mean_delay_s,", 0) != 0) continue;
    double t = 0, p = 0;
    char c;
    std::istringstream row(line.substr(13));
    row >> t >> c >> p;
    EXPECT_LT(p, t);
    found = true;
  }
  EXPECT_TRUE(found);
  fs::remove_all(out);
}

TEST(Cli, IdempotentOutputs) {
  const fs::path a = fresh_dir("idem_a"), b = fresh_dir("idem_b");
  const std::string cfg = " --config " + kConfigs + "/default.ini --set simulation.duration_s=20 ";
  ASSERT_EQ(sh("simulate" + cfg + "--out " + a.string()), 0);
  ASSERT_EQ(sh("simulate" + cfg + "--out " + b.string()), 0);
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(b / name)) << name;
  }
  ASSERT_EQ(sh("simulate" + cfg + "--out " + a.string()), 0);  // rerun into the same dir
  for (const auto& e : fs::directory_iterator(a)) EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, SeedChangesNoiseButNotMaps) {
  const fs::path a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  ASSERT_EQ(sh("map --seed 1 --out " + a.string()), 0);
  ASSERT_EQ(sh("map --seed 2 --out " + b.string()), 0);
  auto body = [](const std::string& s) { return s.substr(s.find('\n') + 1); };  // hash line differs
  EXPECT_EQ(body(slurp(a / "power_map.csv")), body(slurp(b / "power_map.csv")));
  ASSERT_EQ(sh("simulate --scheme predictive --seed 1 --set simulation.duration_s=10 --out " + a.string()), 0);
  ASSERT_EQ(sh("simulate --scheme predictive --seed 2 --set simulation.duration_s=10 --out " + b.string()), 0);
  EXPECT_NE(body(slurp(a / "trace_predictive.csv")), body(slurp(b / "trace_predictive.csv")));
  fs::remove_all(a);
  fs::remove_all(b);
}
