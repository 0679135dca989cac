#pragma once

// On-disk formats: per-generation and profile CSVs, the final-front JSON document,
// the resume snapshot, and the innovization rule report.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "teachopt/config.hpp"
#include "teachopt/errors.hpp"
#include "teachopt/force.hpp"
#include "teachopt/innovization.hpp"
#include "teachopt/moea.hpp"
#include "teachopt/problem.hpp"

namespace teachopt::archive {

using json = nlohmann::ordered_json;
using Archive = moea::ParetoArchive<TeachingProblem>;
using Snapshot = moea::Snapshot<TeachingProblem>;
using Member = moea::Individual<TeachingProblem>;

inline constexpr const char* kFrontFormat = "teachopt-front/1";
inline constexpr const char* kSnapshotFormat = "teachopt-snapshot/1";
inline constexpr const char* kReportFormat = "teachopt-rules/1";

/// 17 significant digits; inf/nan spelled out.
inline std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_csv_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return config::parse_scalar(s);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(config::trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Writes `text` to `path` through a temporary file and a rename.
inline void write_atomically(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << text;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

/// JSON has no infinities; they are written as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_or(const json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

/// Comment line heading every CSV; readers skip lines starting with '#'.
inline std::string provenance_line(const std::string& hash, std::uint64_t seed) {
  return "# teachopt config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

inline void write_profile_csv(std::ostream& os, const force::ForceProfile& p,
                              const std::string& hash, std::uint64_t seed) {
  os << provenance_line(hash, seed) << "t,Fc,q1,q2,q3,q4,q5,q6,rcond\n";
  for (const auto& s : p.samples) {
    os << csv_double(s.t) << ',' << csv_double(s.fc);
    for (int i = 0; i < 6; ++i) os << ',' << csv_double(s.q(i));
    os << ',' << csv_double(s.rcond) << '\n';
  }
}

inline std::string generation_csv_header() {
  std::string h = "gen,id";
  for (auto n : kVariableNames) h += "," + std::string(n);
  return h + ",f1,f2,f3,cv,rank,crowding\n";
}

inline void write_member_row(std::ostream& os, std::size_t gen, std::size_t id, const Member& m) {
  os << gen << ',' << id;
  for (double v : m.x) os << ',' << csv_double(v);
  for (double v : m.eval.f) os << ',' << csv_double(v);
  os << ',' << csv_double(m.eval.cv) << ',' << m.rank << ',' << csv_double(m.crowding) << '\n';
}

inline std::string stats_csv_header() {
  return "gen,feasible_fraction,front_size,best_f1,best_f2,best_f3,median_f1,median_f2,"
         "median_f3,hypervolume\n";
}

inline void write_stats_row(std::ostream& os, const moea::GenerationStats& s) {
  os << s.generation << ',' << csv_double(s.feasible_fraction) << ',' << s.front_size;
  for (double v : s.best) os << ',' << csv_double(v);
  for (double v : s.median) os << ',' << csv_double(v);
  os << ',' << (s.hypervolume ? csv_double(*s.hypervolume) : std::string()) << '\n';
}

inline std::vector<moea::GenerationStats> read_stats_csv(std::istream& in) {
  std::vector<moea::GenerationStats> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto c = split_csv_line(line);
    if (c.size() != 10) throw ConfigError("malformed stats row: " + line);
    moea::GenerationStats s;
    s.generation = config::parse_integer<std::size_t>(c[0]);
    s.feasible_fraction = parse_csv_double(c[1]);
    s.front_size = config::parse_integer<std::size_t>(c[2]);
    for (int i = 3; i < 6; ++i) s.best.push_back(parse_csv_double(c[i]));
    for (int i = 6; i < 9; ++i) s.median.push_back(parse_csv_double(c[i]));
    if (!c[9].empty()) s.hypervolume = parse_csv_double(c[9]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Drops data rows whose leading generation field exceeds `max_gen`.
inline void truncate_generation_csv(const std::filesystem::path& path, std::size_t max_gen) {
  std::ifstream in(path);
  if (!in) return;
  std::string kept, line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#' || header) {
      if (line[0] != '#') header = false;
      kept += line + "\n";
      continue;
    }
    const auto comma = line.find(',');
    if (config::parse_integer<std::size_t>(line.substr(0, comma)) <= max_gen) kept += line + "\n";
  }
  in.close();
  write_atomically(path, kept);
}

// Configuration and problem description embedded in archives.

inline json matrix_json(const kinematics::Mat3& r) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({r(i, 0), r(i, 1), r(i, 2)});
  return rows;
}

inline json config_json(const config::AppConfig& cfg) {
  const auto& c = cfg.constants;
  json constants = {{"joint_mass", c.joint_mass}, {"link_mass", c.link_mass},
                    {"L2", c.L2},  {"L3", c.L3},  {"L4", c.L4},  {"L5", c.L5},
                    {"L5_defaulted", cfg.l5_defaulted},
                    {"rhoA", c.rhoA}, {"rhoB", c.rhoB}, {"g", c.g}};
  json dh = json::array();
  for (const auto& r : c.dh) dh.push_back({r.alpha, r.a, r.d, r.theta_offset});
  constants["dh"] = dh;

  json bounds = json::object();
  for (std::size_t i = 0; i < kNumVars; ++i)
    bounds[std::string(kVariableNames[i])] = {cfg.bounds[i].low, cfg.bounds[i].high};

  const auto& t = cfg.trajectory;
  const auto tool = kinematics::resolve_tool_orientation(t.euler);
  json traj = {{"t_start", t.t_start},
               {"t_end", t.t_end},
               {"t_range_defaulted", cfg.t_range_defaulted},
               {"segments", t.segments},
               {"samples", t.segments + 1},
               {"euler", {t.euler(0), t.euler(1), t.euler(2)}},
               {"euler_convention", kinematics::to_string(tool.convention)},
               {"tool_rotation", matrix_json(tool.rotation)}};

  const auto& r = cfg.run;
  json run = {{"pop_size", r.pop_size},       {"generations", r.generations},
              {"p_crossover", r.p_crossover}, {"p_mutation", r.p_mutation},
              {"eta_sbx", r.eta_sbx},         {"eta_pm", r.eta_pm},
              {"seed", r.seed},               {"csv_every", cfg.csv_every}};
  return {{"constants", constants}, {"bounds", bounds}, {"trajectory", traj}, {"run", run}};
}

inline json member_json(std::size_t id, const Member& m) {
  json x = json::object();
  for (std::size_t i = 0; i < kNumVars; ++i) x[std::string(kVariableNames[i])] = m.x[i];
  json f = json::array(), g = json::array();
  for (double v : m.eval.f) f.push_back(number_or_null(v));
  for (double v : m.eval.g) g.push_back(v);
  return {{"id", id},   {"x", x},         {"f", f},
          {"g", g},     {"cv", m.eval.cv}, {"rank", m.rank},
          {"crowding", number_or_null(m.crowding)}};
}

/// Final-front document. Contains no wall-clock data, so equal runs give equal bytes.
inline json front_document(const config::AppConfig& cfg, const Archive& a,
                           const std::optional<Evaluation>& expert) {
  json doc = {{"format", kFrontFormat},
              {"config_hash", config::config_hash(cfg)},
              {"seed", cfg.run.seed},
              {"generations", a.generations},
              {"config", config_json(cfg)}};
  if (expert) {
    doc["expert"] = {{"f", {expert->f[0], expert->f[1], expert->f[2]}},
                     {"g", {expert->g[0], expert->g[1], expert->g[2]}},
                     {"cv", expert->cv}};
  }
  json members = json::array();
  for (std::size_t i = 0; i < a.front.size(); ++i) members.push_back(member_json(i, a.front[i]));
  doc["front_size"] = a.front.size();
  doc["members"] = members;
  return doc;
}

inline void write_front_csv(std::ostream& os, const config::AppConfig& cfg, const Archive& a) {
  os << provenance_line(config::config_hash(cfg), cfg.run.seed);
  std::string header = generation_csv_header();
  os << header;
  for (std::size_t i = 0; i < a.front.size(); ++i) write_member_row(os, a.generations, i, a.front[i]);
}

// Reading fronts back.


/// Members from a generation or front CSV. When several generations are present,
/// the feasible rank-0 rows of the last one are returned.
inline std::vector<innovization::FrontPoint> read_front_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  struct Row {
    std::size_t gen;
    std::size_t rank;
    double cv;
    innovization::FrontPoint p;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size()) throw ConfigError("CSV row has the wrong column count");
    const auto col = [&](const std::string& name) -> const std::string& {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return cells[i];
      throw ConfigError("CSV is missing column " + name);
    };
    Row r{};
    r.gen = config::parse_integer<std::size_t>(col("gen"));
    r.rank = config::parse_integer<std::size_t>(col("rank"));
    r.cv = parse_csv_double(col("cv"));
    DesignVector::Array a{};
    for (std::size_t i = 0; i < kNumVars; ++i)
      a[i] = parse_csv_double(col(std::string(kVariableNames[i])));
    r.p.x = DesignVector::from_array(a);
    r.p.f = {parse_csv_double(col("f1")), parse_csv_double(col("f2")),
             parse_csv_double(col("f3"))};
    rows.push_back(r);
  }
  std::vector<innovization::FrontPoint> out;
  if (rows.empty()) return out;
  std::size_t last = 0;
  for (const auto& r : rows) last = std::max(last, r.gen);
  for (const auto& r : rows)
    if (r.gen == last && r.rank == 0 && r.cv == 0.0) out.push_back(r.p);
  return out;
}

struct LoadedFront {
  std::vector<innovization::FrontPoint> points;
  std::string run_id;
  std::uint64_t seed = 0;
  Bounds bounds;
};

inline LoadedFront front_from_json(const json& doc) {
  if (!doc.contains("format") || doc["format"] != kFrontFormat)
    throw ConfigError("not a teachopt front document");
  LoadedFront out;
  out.run_id = doc.at("config_hash").get<std::string>();
  out.seed = doc.at("seed").get<std::uint64_t>();
  const auto& b = doc.at("config").at("bounds");
  for (std::size_t i = 0; i < kNumVars; ++i) {
    const auto& r = b.at(std::string(kVariableNames[i]));
    out.bounds[i] = {r.at(0).get<double>(), r.at(1).get<double>()};
  }
  for (const auto& m : doc.at("members")) {
    innovization::FrontPoint p;
    DesignVector::Array a{};
    for (std::size_t i = 0; i < kNumVars; ++i)
      a[i] = m.at("x").at(std::string(kVariableNames[i])).get<double>();
    p.x = DesignVector::from_array(a);
    for (std::size_t i = 0; i < 3; ++i)
      p.f[i] = number_or(m.at("f").at(i), std::numeric_limits<double>::infinity());
    out.points.push_back(p);
  }
  return out;
}

/// Loads a front from an archive directory (front.json), a front JSON file, or a
/// front/generation CSV. CSVs carry no bounds, so the defaults are used.
inline LoadedFront load_front(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  fs::path file = path;
  if (fs::is_directory(path)) file = path / "front.json";
  if (!fs::exists(file)) throw ConfigError("no archive at " + file.string());
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  if (file.extension() == ".csv") {
    LoadedFront out;
    out.points = read_front_csv(in);
    out.run_id = file.stem().string();
    return out;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return front_from_json(doc);
}

// Resume snapshot.

inline json snapshot_document(const config::AppConfig& cfg, const Snapshot& s) {
  json pop = json::array();
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    pop.push_back({{"x", s.x[i]}, {"rank", s.rank[i]}, {"crowding", number_or_null(s.crowding[i])}});
  }
  json stats = json::array();
  for (const auto& st : s.stats) {
    json best = json::array(), median = json::array();
    for (double v : st.best) best.push_back(number_or_null(v));
    for (double v : st.median) median.push_back(number_or_null(v));
    stats.push_back({{"generation", st.generation},
                     {"feasible_fraction", st.feasible_fraction},
                     {"front_size", st.front_size},
                     {"best", best},
                     {"median", median},
                     {"hypervolume", st.hypervolume ? json(*st.hypervolume) : json(nullptr)}});
  }
  return {{"format", kSnapshotFormat},
          {"config_hash", config::config_hash(cfg)},
          {"config_text", config::dump_config(cfg)},
          {"l5_defaulted", cfg.l5_defaulted},
          {"t_range_defaulted", cfg.t_range_defaulted},
          {"expert_fixture", cfg.expert_fixture},
          {"generation", s.generation},
          {"rng_state", s.rng_state},
          {"population", pop},
          {"stats", stats}};
}

struct LoadedSnapshot {
  config::AppConfig config;
  Snapshot snapshot;
};

inline LoadedSnapshot snapshot_from_document(const json& doc) {
  if (!doc.contains("format") || doc["format"] != kSnapshotFormat)
    throw ConfigError("not a teachopt snapshot");
  LoadedSnapshot out;
  out.config = config::parse_config(doc.at("config_text").get<std::string>());
  out.config.l5_defaulted = doc.at("l5_defaulted").get<bool>();
  out.config.t_range_defaulted = doc.at("t_range_defaulted").get<bool>();
  out.config.expert_fixture = doc.at("expert_fixture").get<bool>();
  if (config::config_hash(out.config) != doc.at("config_hash").get<std::string>())
    throw ConfigError("snapshot config hash mismatch");
  auto& s = out.snapshot;
  s.generation = doc.at("generation").get<std::size_t>();
  s.rng_state = doc.at("rng_state").get<std::string>();
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& m : doc.at("population")) {
    s.x.push_back(m.at("x").get<TeachingProblem::Vector>());
    s.rank.push_back(m.at("rank").get<std::size_t>());
    s.crowding.push_back(number_or(m.at("crowding"), inf));
  }
  for (const auto& j : doc.at("stats")) {
    moea::GenerationStats st;
    st.generation = j.at("generation").get<std::size_t>();
    st.feasible_fraction = j.at("feasible_fraction").get<double>();
    st.front_size = j.at("front_size").get<std::size_t>();
    for (const auto& v : j.at("best")) st.best.push_back(number_or(v, nan));
    for (const auto& v : j.at("median")) st.median.push_back(number_or(v, nan));
    if (!j.at("hypervolume").is_null()) st.hypervolume = j.at("hypervolume").get<double>();
    s.stats.push_back(std::move(st));
  }
  return out;
}


// Rule report.

inline json line_json(const std::optional<innovization::LineFit>& f) {
  if (!f) return nullptr;
  return {{"slope", f->slope}, {"intercept", f->intercept}, {"r2", f->r2},
          {"sse", f->sse},     {"n", f->n}};
}

inline json summary_json(const innovization::Summary& s) {
  json j = {{"name", s.name}, {"n", s.n},       {"min", s.min},
            {"max", s.max},   {"mean", s.mean}, {"stddev", s.stddev}};
  if (s.pinned) j["pinned"] = *s.pinned;
  return j;
}

inline json report_to_json(const innovization::RuleReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    json j = {{"x", p.x_name},
              {"y", p.y_name},
              {"kind", innovization::to_string(p.kind)},
              {"line", line_json(p.line)}};
    if (p.segmented) {
      const auto& s = *p.segmented;
      j["segmented"] = {{"breakpoint", s.breakpoint},
                        {"left", line_json(s.left)},
                        {"right", line_json(s.right)},
                        {"single_sse", s.single_sse},
                        {"segmented_sse", s.segmented_sse},
                        {"rms", s.rms},
                        {"gain", s.gain},
                        {"f_stat", number_or_null(s.f_stat)},
                        {"kink", s.kink}};
    } else {
      j["segmented"] = nullptr;
    }
    j["y_summary"] = summary_json(p.y_summary);
    json clusters = json::array();
    for (const auto& c : p.clusters) {
      clusters.push_back({{"cluster", c.cluster},
                          {"n", c.n},
                          {"x_min", c.x_min},
                          {"x_max", c.x_max},
                          {"y_min", c.y_min},
                          {"y_max", c.y_max},
                          {"fit", line_json(c.fit)}});
    }
    j["clusters"] = clusters;
    pairs.push_back(std::move(j));
  }
  json constancy = json::array();
  for (const auto& s : r.constancy) constancy.push_back(summary_json(s));
  return {{"format", kReportFormat},
          {"run_id", r.run_id},
          {"seed", r.seed},
          {"front_size", r.front_size},
          {"cluster_split", r.cluster_split ? json(*r.cluster_split) : json(nullptr)},
          {"pairs", pairs},
          {"constancy", constancy}};
}

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string report_to_text(const innovization::RuleReport& r) {
  std::ostringstream o;
  o << "Design rules from " << r.front_size << " Pareto-optimal designs (run " << r.run_id
    << ", seed " << r.seed << ")\n\n";
  if (r.cluster_split)
    o << "Cluster split: f1 = " << fixed(*r.cluster_split) << " kg (R below, S at or above)\n\n";
  else
    o << "Cluster split: none detected in f1-f2\n\n";
  for (const auto& p : r.pairs) {
    o << p.y_name << " vs " << p.x_name << " [" << innovization::to_string(p.kind) << "]\n";
    if (p.line)
      o << "  line: " << p.y_name << " = " << fixed(p.line->slope) << " * " << p.x_name << " + "
        << fixed(p.line->intercept) << "  (R^2 " << fixed(p.line->r2, 3) << ")\n";
    if (p.segmented) {
      const auto& s = *p.segmented;
      o << "  breakpoint " << p.x_name << " = " << fixed(s.breakpoint)
        << (s.kink ? ""
                   : "  (no kink: gain " + fixed(100.0 * s.gain, 2) + "%, F " +
                         fixed(s.f_stat, 1) + ")")
        << "\n"
        << "    left:  slope " << fixed(s.left.slope) << ", intercept " << fixed(s.left.intercept)
        << ", R^2 " << fixed(s.left.r2, 3) << ", n " << s.left.n << "\n"
        << "    right: slope " << fixed(s.right.slope) << ", intercept "
        << fixed(s.right.intercept) << ", R^2 " << fixed(s.right.r2, 3) << ", n " << s.right.n
        << "\n";
    }
    o << "  " << p.y_name << " range [" << fixed(p.y_summary.min) << ", "
      << fixed(p.y_summary.max) << "], mean " << fixed(p.y_summary.mean) << "\n";
    for (const auto& c : p.clusters) {
      o << "  cluster " << c.cluster << ": n " << c.n;
      if (c.n > 0)
        o << ", " << p.y_name << " in [" << fixed(c.y_min) << ", " << fixed(c.y_max) << "]";
      if (c.fit) o << ", slope " << fixed(c.fit->slope) << " (R^2 " << fixed(c.fit->r2, 3) << ")";
      o << "\n";
    }
    o << "\n";
  }
  for (const auto& s : r.constancy) {
    o << s.name << ": mean " << fixed(s.mean) << ", stddev " << fixed(s.stddev, 5) << ", range ["
      << fixed(s.min) << ", " << fixed(s.max) << "]"
      << (s.pinned && *s.pinned ? "  pinned" : "") << "\n";
  }
  return o.str();
}

inline void write_scatter_csv(std::ostream& os, const innovization::RuleReport& r,
                              std::span<const innovization::FrontPoint> front,
                              const std::string& x, const std::string& y) {
  os << provenance_line(r.run_id, r.seed) << x << ',' << y << '\n';
  for (const auto& p : front)
    os << csv_double(innovization::column(p, x)) << ',' << csv_double(innovization::column(p, y))
       << '\n';
}

}  // namespace teachopt::archive
