#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace cdpr::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cdpr(std::vector<std::string> args) {
  args.insert(args.begin(), "cdpr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cdpr_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { unsetenv("CDPR_SEED"); }
  void TearDown() override { unsetenv("CDPR_SEED"); }
};

TEST_F(CliTest, InverseKinematics) {
  const auto r = cdpr({"ik", "--x", "750", "--y", "750"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "l1=975.807 l2=975.807\n");
  EXPECT_EQ(cdpr({"ik", "--x", "60", "--y", "1440"}).out, "l1=0 l2=1380\n");
}

TEST_F(CliTest, ForwardKinematics) {
  const auto r = cdpr({"fk", "--l1", "837.377", "--l2", "1056.031"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "x=600 y=799.999\n");
  EXPECT_EQ(cdpr({"fk", "--lengths", "837.377,1056.031"}).out, r.out);
  const auto n = cdpr({"fk", "--lengths", "837.377,1056.031", "--numeric", "--guess", "700,700"});
  EXPECT_EQ(n.code, kExitOk);
  EXPECT_EQ(n.out, r.out);
  EXPECT_EQ(cdpr({"fk", "--l1", "1", "--l2", "1"}).code, kExitInfeasible);
  EXPECT_EQ(cdpr({"fk", "--l1", "1", "--l2", "1", "--numeric"}).code, kExitInfeasible);
  EXPECT_EQ(cdpr({"fk", "--l1", "900"}).code, kExitUsage);
}

TEST_F(CliTest, Tensions) {
  const auto ok = cdpr({"tensions", "--x", "750", "--y", "750"});
  EXPECT_EQ(ok.code, kExitOk);
  EXPECT_EQ(ok.out, "t1=6.93672 t2=6.93672 feasible\n");
  const auto high = cdpr({"tensions", "--x", "750", "--y", "1435"});
  EXPECT_EQ(high.code, kExitInfeasible);
  EXPECT_EQ(high.out, "t1=676.908 t2=676.908 infeasible\n");
  const auto degenerate = cdpr({"tensions", "--x", "60", "--y", "1440"});
  EXPECT_EQ(degenerate.code, kExitInfeasible);
  EXPECT_NE(degenerate.err.find("degenerate"), std::string::npos);
}

TEST_F(CliTest, Workspace) {
  const auto path = scratch("ws.csv");
  const auto r = cdpr({"workspace", "--spacing", "100", "--out", path.string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out.substr(0, 23), "cells=256 feasible=192 ");
  EXPECT_EQ(slurp(path).substr(0, 37), "x_mm,y_mm,feasible,t_max_n,t1_n,t2_n\n");
  EXPECT_EQ(cdpr({"workspace", "--spacing", "0", "--out", path.string()}).code, kExitUsage);
  EXPECT_EQ(cdpr({"workspace", "--spacing", "-5", "--out", path.string()}).code, kExitUsage);
}

TEST_F(CliTest, RobotFile) {
  const auto path = scratch("robot.json");
  std::ofstream(path) << R"({"anchors": [[0, 1500], [1500, 1500]], "ee_width_mm": 120,
    "ee_height_mm": 120, "ee_mass_kg": 2, "tension_min_n": 0, "tension_max_n": 20, "dof": 2})";
  EXPECT_EQ(cdpr({"tensions", "--robot", path.string(), "--x", "750", "--y", "750"}).out,
            "t1=13.8734 t2=13.8734 feasible\n");
  std::ofstream(path) << "{broken";
  EXPECT_EQ(cdpr({"ik", "--robot", path.string(), "--x", "1", "--y", "1"}).code, kExitUsage);
  EXPECT_EQ(cdpr({"ik", "--robot", scratch("missing.json").string(), "--x", "1", "--y", "1"}).code,
            kExitUsage);
}

TEST_F(CliTest, HelpOnEverySubcommand) {
  for (const char* sub : {"ik", "fk", "tensions", "workspace", "serve-plant", "serve-gateway",
                          "run-loop", "analyze"}) {
    const auto r = cdpr({sub, "--help"});
    EXPECT_EQ(r.code, kExitOk) << sub;
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
  EXPECT_EQ(cdpr({"--help"}).code, kExitOk);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cdpr({}).code, kExitUsage);
  EXPECT_EQ(cdpr({"teleport"}).code, kExitUsage);
  for (const char* sub : {"ik", "fk", "tensions", "workspace", "serve-plant", "serve-gateway",
                          "run-loop", "analyze"})
    EXPECT_EQ(cdpr({sub, "--no-such-flag"}).code, kExitUsage) << sub;
  EXPECT_EQ(cdpr({"ik", "--x", "abc", "--y", "1"}).code, kExitUsage);
  EXPECT_EQ(cdpr({"run-loop", "--preset", "nope"}).code, kExitUsage);
  EXPECT_EQ(cdpr({"run-loop", "--cycle", "0.0105", "--out", scratch("x.csv").string()}).code,
            kExitUsage);
  EXPECT_EQ(cdpr({"serve-plant", "--listen", "nohost"}).code, kExitUsage);
}

TEST_F(CliTest, RunLoopAndAnalyze) {
  const auto log = scratch("direct.csv");
  const auto r = cdpr({"run-loop", "--direct", "--speed", "1000", "--out", log.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, 8), "records=");
  EXPECT_TRUE(fs::exists(log));

  const auto remote = scratch("remote.csv");
  EXPECT_EQ(cdpr({"run-loop", "--gateway-delay", "120", "--gateway-jitter", "10", "--speed",
                  "1000", "--out", remote.string()})
                .code,
            kExitOk);
  const auto dir = scratch("report");
  fs::remove_all(dir);
  const auto a = cdpr({"analyze", "--log-a", remote.string(), "--log-b", log.string(), "--speed",
                       "1000", "--out-dir", dir.string()});
  EXPECT_EQ(a.code, kExitOk) << a.err;
  EXPECT_NE(a.out.find("Time delay"), std::string::npos);
  EXPECT_NE(a.out.find("upper"), std::string::npos);
  for (const char* f : {"delay.csv", "errors.csv", "series_a.csv", "series_b.csv", "report.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  EXPECT_EQ(cdpr({"analyze", "--log-a", remote.string(), "--alignment", "sideways"}).code,
            kExitUsage);
}

TEST_F(CliTest, AnalyzeConstantLogIsDegenerate) {
  const auto still = scratch("still.csv");
  const auto plan = scratch("still_plan.json");
  std::ofstream(plan) << R"({"speed_mmps": 100, "accel_mmps2": 2000,
    "segments": [{"start": [750, 800], "end": [750, 800.000001]}]})";
  ASSERT_EQ(cdpr({"run-loop", "--direct", "--plan", plan.string(), "--plant-mode", "ideal",
                  "--tail", "2", "--out", still.string()})
                .code,
            kExitOk);
  EXPECT_EQ(cdpr({"analyze", "--log-a", still.string(), "--plan", plan.string(), "--out-dir",
                  scratch("still_report").string()})
                .code,
            kExitInfeasible);
}

TEST_F(CliTest, SeedFromEnvironment) {
  auto run_with = [](const std::vector<std::string>& extra, const std::string& name) {
    std::vector<std::string> args = {"run-loop", "--gateway-delay", "20", "--gateway-jitter", "5",
                                     "--speed", "1000", "--out", scratch(name).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    EXPECT_EQ(cdpr(args).code, kExitOk);
    return slurp(scratch(name));
  };
  const auto flag7 = run_with({"--seed", "7"}, "seed_flag7.csv");
  const auto default42 = run_with({}, "seed_default.csv");
  EXPECT_EQ(default42, run_with({"--seed", "42"}, "seed_flag42.csv"));
  setenv("CDPR_SEED", "7", 1);
  EXPECT_EQ(run_with({}, "seed_env7.csv"), flag7);
  // The flag wins over the environment.
  EXPECT_EQ(run_with({"--seed", "42"}, "seed_env7_flag42.csv"), default42);
  EXPECT_NE(flag7, default42);
  setenv("CDPR_SEED", "seven", 1);
  EXPECT_EQ(cdpr({"run-loop", "--gateway-delay", "20", "--out", scratch("bad.csv").string()}).code,
            kExitUsage);
}

TEST_F(CliTest, PresetWritesLogsAndReports) {
  const auto dir = scratch("preset");
  fs::remove_all(dir);
  const auto r = cdpr({"run-loop", "--preset", "paper-table-1-2", "--out-dir", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"remote_100.csv", "local_100.csv", "remote_1000.csv", "local_1000.csv",
                        "report_100/errors.csv", "report_1000/delay.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_NE(r.out.find("== 100 mm/s"), std::string::npos);
  EXPECT_NE(r.out.find("== 1000 mm/s"), std::string::npos);
}

TEST_F(CliTest, ConnectUnreachable) {
  const auto log = scratch("unreachable.csv");
  fs::remove(log);
  const auto r = cdpr({"run-loop", "--connect", "127.0.0.1:1", "--out", log.string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_FALSE(fs::exists(log));
}

}  // namespace
}  // namespace cdpr::cli
