#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"

using namespace teachopt;
using namespace teachopt::archive;
namespace fs = std::filesystem;

namespace {

config::AppConfig small_config() {
  return config::parse_config(
      "[trajectory]\nsegments = 20\n[run]\npop_size = 12\ngenerations = 6\nseed = 5\n");
}

struct SmallRun {
  config::AppConfig cfg = small_config();
  TeachingProblem problem{cfg.constants, cfg.bounds, cfg.trajectory};
  moea::Nsga2<TeachingProblem> engine{problem, cfg.run};
  SmallRun() { engine.run(); }
};

const SmallRun& small_run() {
  static const SmallRun r;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("teachopt_archive_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Archive fake_archive(std::size_t n) {
  Archive a;
  a.generations = 3;
  Rng rng(71);
  for (std::size_t i = 0; i < n; ++i) {
    Member m;
    m.x = random_design(Bounds{}, rng).to_array();
    m.eval.f = {rng.uniform(50.0, 60.0), rng.uniform(100.0, 200.0), rng.uniform(1.0, 20.0)};
    m.crowding = i == 0 ? std::numeric_limits<double>::infinity() : rng.uniform();
    a.front.push_back(m);
  }
  return a;
}

}  // namespace

TEST(Csv, DoublesRoundTripExactly) {
  Rng rng(73);
  for (int i = 0; i < 5000; ++i) {
    const double v = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-300.0, 300.0));
    EXPECT_EQ(parse_csv_double(csv_double(v)), v);
  }
  EXPECT_TRUE(std::isinf(parse_csv_double(csv_double(std::numeric_limits<double>::infinity()))));
  EXPECT_TRUE(std::isnan(parse_csv_double(csv_double(std::nan("")))));
  EXPECT_EQ(csv_double(0.5), "0.5");
}

TEST(Csv, SplitKeepsEmptyCells) {
  EXPECT_EQ(split_csv_line("a, b ,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(split_csv_line("1,,3,"), (std::vector<std::string>{"1", "", "3", ""}));
}

TEST(Csv, ProvenanceLineFirst) {
  std::ostringstream o;
  write_profile_csv(o, force::trajectory_force_profile(expert_design(), ManipulatorConstants{}, force::TrajectorySpec{}), "abc", 9);
  const auto text = o.str();
  EXPECT_EQ(text.rfind("# teachopt config_hash=abc seed=9\nt,Fc,", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2 + 501);
}

TEST(Csv, StatsRoundTrip) {
  const auto& stats = small_run().engine.stats();
  std::ostringstream o;
  o << provenance_line("h", 1) << stats_csv_header();
  for (const auto& s : stats) write_stats_row(o, s);
  std::istringstream in(o.str());
  const auto back = read_stats_csv(in);
  ASSERT_EQ(back.size(), stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    EXPECT_EQ(back[i].generation, stats[i].generation);
    EXPECT_EQ(back[i].feasible_fraction, stats[i].feasible_fraction);
    EXPECT_EQ(back[i].front_size, stats[i].front_size);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_TRUE(back[i].best[k] == stats[i].best[k] ||
                  (std::isnan(back[i].best[k]) && std::isnan(stats[i].best[k])));
    }
    EXPECT_FALSE(back[i].hypervolume.has_value());
  }
}

TEST(Csv, TruncateDropsLaterGenerations) {
  const auto dir = scratch("truncate");
  const auto path = dir / "generations.csv";
  {
    std::ofstream o(path);
    o << provenance_line("h", 1) << generation_csv_header();
    for (std::size_t g = 0; g <= 4; ++g)
      for (std::size_t i = 0; i < 3; ++i) o << g << "," << i << ",x\n";
  }
  truncate_generation_csv(path, 2);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 2u + 9u);
  EXPECT_EQ(lines[0][0], '#');
  EXPECT_EQ(lines.back(), "2,2,x");
  fs::remove_all(dir);
}

TEST(Front, JsonRoundTrip) {
  const auto cfg = small_config();
  const auto a = fake_archive(15);
  const auto doc = front_document(cfg, a, std::nullopt);
  EXPECT_EQ(doc["format"], kFrontFormat);
  EXPECT_EQ(doc["members"][0]["crowding"], nullptr);
  EXPECT_EQ(doc["config"]["trajectory"]["euler_convention"], "ZYZ");
  EXPECT_FALSE(doc.contains("expert"));
  const auto text = doc.dump(2);
  EXPECT_EQ(json::parse(text).dump(2), text);

  const auto loaded = front_from_json(json::parse(text));
  EXPECT_EQ(loaded.run_id, config::config_hash(cfg));
  EXPECT_EQ(loaded.seed, 5u);
  ASSERT_EQ(loaded.points.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(loaded.points[i].x.to_array(), a.front[i].x);
    EXPECT_EQ(loaded.points[i].f, a.front[i].eval.f);
  }
  EXPECT_THROW(front_from_json(json{{"format", "other"}}), ConfigError);
}

TEST(Front, CsvRoundTripAndDirectoryLoading) {
  const auto cfg = small_config();
  const auto a = fake_archive(12);
  const auto dir = scratch("front");
  {
    std::ofstream o(dir / "front.csv");
    write_front_csv(o, cfg, a);
    std::ofstream j(dir / "front.json");
    j << front_document(cfg, a, std::optional<Evaluation>(evaluate(expert_design(), cfg.constants, cfg.trajectory))).dump(2);
  }
  const auto csv = load_front(dir / "front.csv");
  const auto js = load_front(dir);
  ASSERT_EQ(csv.points.size(), 12u);
  ASSERT_EQ(js.points.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(csv.points[i].x, js.points[i].x);
    EXPECT_EQ(csv.points[i].f, js.points[i].f);
  }
  EXPECT_THROW(load_front(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Front, CsvReaderKeepsLastGenerationFeasibleFront) {
  std::ostringstream o;
  o << generation_csv_header();
  Member m;
  m.x = expert_design().to_array();
  m.eval.f = {1, 2, 3};
  write_member_row(o, 0, 0, m);
  write_member_row(o, 1, 0, m);
  m.rank = 1;
  write_member_row(o, 1, 1, m);
  m.rank = 0;
  m.eval.cv = 0.5;
  write_member_row(o, 1, 2, m);
  std::istringstream in(o.str());
  EXPECT_EQ(read_front_csv(in).size(), 1u);
}

TEST(Snapshot, DocumentRoundTrip) {
  const auto& run = small_run();
  const auto snap = run.engine.snapshot();
  const auto doc = snapshot_document(run.cfg, snap);
  const auto text = doc.dump();
  const auto loaded = snapshot_from_document(json::parse(text));
  EXPECT_EQ(snapshot_document(loaded.config, loaded.snapshot).dump(), text);
  EXPECT_EQ(loaded.snapshot.x, snap.x);
  EXPECT_EQ(loaded.snapshot.rng_state, snap.rng_state);
  EXPECT_EQ(config::config_hash(loaded.config), config::config_hash(run.cfg));

  auto tampered = json::parse(text);
  tampered["config_hash"] = "0000000000000000";
  EXPECT_THROW(snapshot_from_document(tampered), ConfigError);
}

TEST(Snapshot, ResumeFromDocumentIsExact) {
  auto cfg = small_config();
  TeachingProblem problem(cfg.constants, cfg.bounds, cfg.trajectory);
  cfg.run.generations = 3;
  moea::Nsga2<TeachingProblem> first(problem, cfg.run);
  first.run();
  const auto text = snapshot_document(cfg, first.snapshot()).dump();

  const auto loaded = snapshot_from_document(json::parse(text));
  auto run = loaded.config.run;
  run.generations = 6;
  moea::Nsga2<TeachingProblem> resumed(problem, run);
  resumed.restore(loaded.snapshot);
  resumed.run();

  const auto& straight = small_run().engine;
  ASSERT_EQ(resumed.population().size(), straight.population().size());
  for (std::size_t i = 0; i < straight.population().size(); ++i) {
    EXPECT_EQ(resumed.population()[i].x, straight.population()[i].x);
    EXPECT_EQ(resumed.population()[i].eval.f, straight.population()[i].eval.f);
  }
}

TEST(Atomic, ReplacesContent) {
  const auto dir = scratch("atomic");
  write_atomically(dir / "a.txt", "one");
  write_atomically(dir / "a.txt", "two");
  std::ifstream in(dir / "a.txt");
  std::string s;
  in >> s;
  EXPECT_EQ(s, "two");
  EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
  fs::remove_all(dir);
}
