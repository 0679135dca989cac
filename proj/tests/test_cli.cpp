#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(TEACHOPT_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("teachopt_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string source(const std::string& rel) { return std::string(TEACHOPT_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST(Cli, EvaluateExpert) {
  const auto r = run("evaluate --expert");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("63.331400"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("g1 joint 5 violation     2.315838"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("60.294206"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("feasible                 no"), std::string::npos);
  EXPECT_NE(r.out.find("WARNING: L5"), std::string::npos);
  EXPECT_NE(r.out.find("WARNING: trajectory t-range"), std::string::npos);
}

TEST(Cli, EvaluateDesignFileAndProfile) {
  const auto dir = scratch("evaluate");
  const auto r = run("evaluate --design " + source("configs/expert.design") + " --profile " +
                     (dir / "profile.csv").string() + " --config " + source("configs/default.cfg"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("63.331400"), std::string::npos);
  EXPECT_EQ(r.out.find("WARNING: L5"), std::string::npos);
  const auto csv = slurp(dir / "profile.csv");
  EXPECT_EQ(csv.rfind("# teachopt config_hash=", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 503);
  fs::remove_all(dir);
}

TEST(Cli, ZeroDesignIsInfeasible) {
  const auto dir = scratch("zeros");
  write(dir / "zeros.design",
        "[design]\nmA = 0\nmB = 0\nLA = 0\nLB = 0\nk = 0\nHb = 0.15\nT1 = 0\nT2 = 0\nT3 = 0\n");
  const auto r = run("evaluate --design " + (dir / "zeros.design").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("feasible                 no"), std::string::npos);
  EXPECT_NE(r.out.find("WARNING: mB"), std::string::npos);
  EXPECT_EQ(r.out.find("g2 joint 3 violation     0.000000"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("g3 joint 2 violation     0.000000"), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Cli, BadInputsGiveExitTwo) {
  const auto dir = scratch("bad");
  write(dir / "bad.design", "[design]\nmA = one\n");
  write(dir / "bad.cfg", "[run]\nwhatever = 1\n");
  EXPECT_EQ(run("evaluate --design " + (dir / "bad.design").string()).code, 2);
  EXPECT_EQ(run("evaluate --config " + (dir / "bad.cfg").string()).code, 2);
  EXPECT_EQ(run("evaluate --expert --design " + source("configs/expert.design")).code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("optimize --pop 7 --gens 1 -q --out " + (dir / "o").string()).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, OptimizeIsDeterministicAndResumable) {
  const auto dir = scratch("optimize");
  const std::string common = " --pop 20 --seed 11 -q --csv-every 10";
  const auto a = run("optimize --gens 200 --out " + (dir / "a").string() + common);
  ASSERT_EQ(a.code, 0) << a.out;
  const auto b = run("optimize --gens 200 --out " + (dir / "b").string() + common);
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(slurp(dir / "a" / "front.json"), slurp(dir / "b" / "front.json"));

  // stop at 150, then continue to 200
  const auto c1 = run("optimize --gens 150 --out " + (dir / "c").string() + common);
  ASSERT_EQ(c1.code, 0) << c1.out;
  const auto c2 = run("optimize --resume " + (dir / "c").string() + " --gens 200 -q");
  ASSERT_EQ(c2.code, 0) << c2.out;
  for (const char* f : {"front.json", "front.csv", "generations.csv", "stats.csv", "snapshot.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "c" / f)) << f;

  // a stop between csv_every multiples leaves no extra rows behind
  ASSERT_EQ(run("optimize --gens 155 --out " + (dir / "d").string() + common).code, 0);
  ASSERT_EQ(run("optimize --resume " + (dir / "d").string() + " --gens 200 -q").code, 0);
  for (const char* f : {"front.json", "generations.csv", "stats.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "d" / f)) << f;

  const auto doc = teachopt::archive::json::parse(slurp(dir / "a" / "front.json"));
  EXPECT_EQ(doc["generations"], 200);
  EXPECT_GT(doc["front_size"].get<int>(), 0);
  for (const auto& m : doc["members"]) EXPECT_EQ(m["cv"], 0.0);

  // resume may not change the problem
  EXPECT_EQ(run("optimize --resume " + (dir / "c").string() + " --seed 3").code, 2);
  EXPECT_EQ(run("optimize --resume " + (dir / "c").string() + " --gens 100 -q").code, 2);

  const auto rules = run("innovize " + (dir / "a").string() + " -q");
  EXPECT_EQ(rules.code, 0) << rules.out;
  const auto report = teachopt::archive::json::parse(slurp(dir / "a" / "rules.json"));
  EXPECT_EQ(report["pairs"].size(), 8u);
  EXPECT_TRUE(fs::exists(dir / "a" / "scatter_f1_f2.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "rules.txt"));
  fs::remove_all(dir);
}

TEST(Cli, InnovizeRejectsTinyOrMissingFronts) {
  const auto dir = scratch("innovize");
  std::ostringstream csv;
  csv << teachopt::archive::generation_csv_header();
  write(dir / "empty.csv", csv.str());
  EXPECT_EQ(run("innovize " + (dir / "empty.csv").string()).code, 3);
  EXPECT_EQ(run("innovize " + (dir / "nothing_here").string()).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, CheckTrajectory) {
  const auto dir = scratch("trajectory");
  const auto r = run("check-trajectory --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("usable 501/501"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("resolved as ZYZ"), std::string::npos);
  EXPECT_EQ(r.out.find("Z < 0"), std::string::npos);
  const auto csv = slurp(dir / "trajectory_check.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 503);

  const auto three = run("check-trajectory --segments 2");
  EXPECT_NE(three.out.find("3 samples"), std::string::npos) << three.out;
  EXPECT_NE(three.out.find("WARNING: trajectory t-range"), std::string::npos);

  const auto wide = run("check-trajectory --t-end 12.566370614359172");
  EXPECT_NE(wide.out.find("Z < 0"), std::string::npos) << wide.out;
  EXPECT_EQ(wide.out.find("WARNING: trajectory t-range"), std::string::npos);
  fs::remove_all(dir);
}
