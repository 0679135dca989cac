#pragma once

// Flat key-value configuration with [section] headers and '#' comments.
//
//   [constants]   m1..m6 mL1..mL5 L2 L3 L4 L5 rhoA rhoB g dh1..dh6
//   [bounds]      mA mB LA LB k Hb T1 T2 T3   (each "low high")
//   [trajectory]  t_start t_end segments euler seed_q
//   [run]         pop_size generations p_crossover p_mutation eta_sbx eta_pm seed csv_every
//   [output]      dir expert_fixture
//
// Scalars accept plain numbers and products/quotients of numbers and `pi`,
// e.g. `pi`, `-pi/2`, `2*pi`, `1/9`.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "teachopt/errors.hpp"
#include "teachopt/force.hpp"
#include "teachopt/model.hpp"
#include "teachopt/moea.hpp"

namespace teachopt::config {

struct Entry {
  std::string value;
  int line = 0;
};

/// Parsed sections in file order; duplicate keys are rejected.
struct KeyValueDocument {
  std::map<std::string, std::map<std::string, Entry>> sections;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline KeyValueDocument parse_document(std::string_view text) {
  KeyValueDocument doc;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      doc.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key outside of a section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    auto& sec = doc.sections[section];
    if (sec.contains(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
    sec[key] = {value, line_no};
  }
  return doc;
}

/// Product/quotient of numbers and `pi` with an optional leading minus.
inline double parse_scalar(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) throw ConfigError("empty numeric value");
  double sign = 1.0;
  if (t.front() == '-') {
    sign = -1.0;
    t.erase(0, 1);
  }
  double result = 1.0;
  char op = '*';
  std::size_t pos = 0;
  while (pos <= t.size()) {
    const auto next = t.find_first_of("*/", pos);
    const std::string factor = trim(t.substr(pos, next == std::string::npos ? next : next - pos));
    double v;
    if (factor == "pi") {
      v = std::numbers::pi;
    } else {
      const char* first = factor.data();
      const char* last = first + factor.size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (factor.empty() || factor.front() == '-' || ec != std::errc() || ptr != last)
        throw ConfigError("not a number: '" + std::string(s) + "'");
    }
    result = op == '*' ? result * v : result / v;
    if (next == std::string::npos) break;
    op = t[next];
    pos = next + 1;
  }
  if (!std::isfinite(result)) throw ConfigError("non-finite value: '" + std::string(s) + "'");
  return sign * result;
}

inline std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(parse_scalar(tok));
  return out;
}

template <class Int>
Int parse_integer(std::string_view s) {
  const std::string t = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("not an integer: '" + t + "'");
  return v;
}

inline bool parse_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("not a boolean: '" + t + "'");
}

/// Shortest text that reads back as the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct AppConfig {
  ManipulatorConstants constants;
  Bounds bounds;
  force::TrajectorySpec trajectory;
  moea::RunConfig run;
  std::size_t csv_every = 1;
  std::string output_dir = "teachopt_out";
  bool expert_fixture = true;

  bool l5_defaulted = true;
  bool t_range_defaulted = true;

  /// WARNING lines for values the device data does not pin down.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (l5_defaulted)
      w.push_back("WARNING: L5 (Link 5 length) not configured; using default " +
                  format_double(constants.L5) + " m");
    if (t_range_defaulted)
      w.push_back("WARNING: trajectory t-range not configured; using default [" +
                  format_double(trajectory.t_start) + ", " + format_double(trajectory.t_end) +
                  "]");
    return w;
  }

  void validate() const {
    constants.validate();
    bounds.validate();
    trajectory.validate();
    run.validate();
    if (csv_every == 0) throw ConfigError("csv_every must be at least 1");
  }
};

namespace detail {

inline void require_count(const std::string& key, const std::vector<double>& v, std::size_t n) {
  if (v.size() != n)
    throw ConfigError(key + ": expected " + std::to_string(n) + " values, got " +
                      std::to_string(v.size()));
}

inline void apply_constants(AppConfig& cfg, const std::map<std::string, Entry>& sec) {
  auto& c = cfg.constants;
  for (const auto& [key, e] : sec) {
    if (key.size() == 2 && key[0] == 'm' && key[1] >= '1' && key[1] <= '6') {
      c.joint_mass[static_cast<std::size_t>(key[1] - '1')] = parse_scalar(e.value);
    } else if (key.size() == 3 && key.starts_with("mL") && key[2] >= '1' && key[2] <= '5') {
      c.link_mass[static_cast<std::size_t>(key[2] - '1')] = parse_scalar(e.value);
    } else if (key == "L2") {
      c.L2 = parse_scalar(e.value);
    } else if (key == "L3") {
      c.L3 = parse_scalar(e.value);
    } else if (key == "L4") {
      c.L4 = parse_scalar(e.value);
    } else if (key == "L5") {
      c.L5 = parse_scalar(e.value);
      cfg.l5_defaulted = false;
    } else if (key == "rhoA") {
      c.rhoA = parse_scalar(e.value);
    } else if (key == "rhoB") {
      c.rhoB = parse_scalar(e.value);
    } else if (key == "g") {
      c.g = parse_scalar(e.value);
    } else if (key.size() == 3 && key.starts_with("dh") && key[2] >= '1' && key[2] <= '6') {
      const auto v = parse_list(e.value);
      if (v.size() != 3 && v.size() != 4)
        throw ConfigError(key + ": expected 'alpha a d [theta_offset]'");
      c.dh[static_cast<std::size_t>(key[2] - '1')] = {v[0], v[1], v[2], v.size() == 4 ? v[3] : 0.0};
    } else {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key [constants] " + key);
    }
  }
}

inline void apply_bounds(AppConfig& cfg, const std::map<std::string, Entry>& sec) {
  for (const auto& [key, e] : sec) {
    bool known = false;
    for (std::size_t i = 0; i < kNumVars; ++i) {
      if (kVariableNames[i] != key) continue;
      const auto v = parse_list(e.value);
      require_count(key, v, 2);
      cfg.bounds[i] = {v[0], v[1]};
      known = true;
    }
    if (!known)
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key [bounds] " + key);
  }
}

inline void apply_trajectory(AppConfig& cfg, const std::map<std::string, Entry>& sec) {
  auto& t = cfg.trajectory;
  for (const auto& [key, e] : sec) {
    if (key == "t_start") {
      t.t_start = parse_scalar(e.value);
      cfg.t_range_defaulted = false;
    } else if (key == "t_end") {
      t.t_end = parse_scalar(e.value);
      cfg.t_range_defaulted = false;
    } else if (key == "segments") {
      t.segments = parse_integer<int>(e.value);
    } else if (key == "euler") {
      const auto v = parse_list(e.value);
      require_count(key, v, 3);
      t.euler = {v[0], v[1], v[2]};
    } else if (key == "seed_q") {
      const auto v = parse_list(e.value);
      require_count(key, v, 6);
      for (int i = 0; i < 6; ++i) t.initial_seed(i) = v[static_cast<std::size_t>(i)];
    } else {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key [trajectory] " + key);
    }
  }
}

inline void apply_run(AppConfig& cfg, const std::map<std::string, Entry>& sec) {
  auto& r = cfg.run;
  for (const auto& [key, e] : sec) {
    if (key == "pop_size") {
      r.pop_size = parse_integer<std::size_t>(e.value);
    } else if (key == "generations") {
      r.generations = parse_integer<std::size_t>(e.value);
    } else if (key == "p_crossover") {
      r.p_crossover = parse_scalar(e.value);
    } else if (key == "p_mutation") {
      r.p_mutation = parse_scalar(e.value);
    } else if (key == "eta_sbx") {
      r.eta_sbx = parse_scalar(e.value);
    } else if (key == "eta_pm") {
      r.eta_pm = parse_scalar(e.value);
    } else if (key == "seed") {
      r.seed = parse_integer<std::uint64_t>(e.value);
    } else if (key == "csv_every") {
      cfg.csv_every = parse_integer<std::size_t>(e.value);
    } else {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key [run] " + key);
    }
  }
}

inline void apply_output(AppConfig& cfg, const std::map<std::string, Entry>& sec) {
  for (const auto& [key, e] : sec) {
    if (key == "dir") {
      cfg.output_dir = e.value;
    } else if (key == "expert_fixture") {
      cfg.expert_fixture = parse_bool(e.value);
    } else {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key [output] " + key);
    }
  }
}

}  // namespace detail

inline AppConfig parse_config(std::string_view text) {
  const auto doc = parse_document(text);
  AppConfig cfg;
  for (const auto& [name, sec] : doc.sections) {
    if (name == "constants") {
      detail::apply_constants(cfg, sec);
    } else if (name == "bounds") {
      detail::apply_bounds(cfg, sec);
    } else if (name == "trajectory") {
      detail::apply_trajectory(cfg, sec);
    } else if (name == "run") {
      detail::apply_run(cfg, sec);
    } else if (name == "output") {
      detail::apply_output(cfg, sec);
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  cfg.validate();
  return cfg;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline AppConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

/// Canonical text of everything that affects results; excludes the [output]
/// section so archives written to different directories hash identically.
inline std::string dump_config(const AppConfig& cfg) {
  std::ostringstream o;
  const auto& c = cfg.constants;
  o << "[constants]\n";
  for (int i = 1; i <= 6; ++i) o << "m" << i << " = " << format_double(c.m(i)) << "\n";
  for (int i = 1; i <= 5; ++i) o << "mL" << i << " = " << format_double(c.mL(i)) << "\n";
  o << "L2 = " << format_double(c.L2) << "\nL3 = " << format_double(c.L3)
    << "\nL4 = " << format_double(c.L4) << "\nL5 = " << format_double(c.L5)
    << "\nrhoA = " << format_double(c.rhoA) << "\nrhoB = " << format_double(c.rhoB)
    << "\ng = " << format_double(c.g) << "\n";
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& r = c.dh[i];
    o << "dh" << i + 1 << " = " << format_double(r.alpha) << " " << format_double(r.a) << " "
      << format_double(r.d) << " " << format_double(r.theta_offset) << "\n";
  }
  o << "\n[bounds]\n";
  for (std::size_t i = 0; i < kNumVars; ++i)
    o << kVariableNames[i] << " = " << format_double(cfg.bounds[i].low) << " "
      << format_double(cfg.bounds[i].high) << "\n";
  const auto& t = cfg.trajectory;
  o << "\n[trajectory]\nt_start = " << format_double(t.t_start)
    << "\nt_end = " << format_double(t.t_end) << "\nsegments = " << t.segments
    << "\neuler = " << format_double(t.euler(0)) << " " << format_double(t.euler(1)) << " "
    << format_double(t.euler(2)) << "\nseed_q =";
  for (int i = 0; i < 6; ++i) o << " " << format_double(t.initial_seed(i));
  const auto& r = cfg.run;
  o << "\n\n[run]\npop_size = " << r.pop_size << "\ngenerations = " << r.generations
    << "\np_crossover = " << format_double(r.p_crossover)
    << "\np_mutation = " << format_double(r.p_mutation)
    << "\neta_sbx = " << format_double(r.eta_sbx) << "\neta_pm = " << format_double(r.eta_pm)
    << "\nseed = " << r.seed << "\ncsv_every = " << cfg.csv_every << "\n";
  return o.str();
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hash of the result-relevant configuration, excluding the generation budget so
/// a run extended by resume keeps its identity.
inline std::string config_hash(const AppConfig& cfg) {
  AppConfig c = cfg;
  c.run.generations = 0;
  return fnv1a_hex(dump_config(c));
}

/// Reads a design from a [design] section listing all nine variables.
inline DesignVector parse_design(std::string_view text) {
  const auto doc = parse_document(text);
  if (doc.sections.size() != 1 || !doc.sections.contains("design"))
    throw ConfigError("design file must contain exactly one [design] section");
  const auto& sec = doc.sections.at("design");
  DesignVector::Array a{};
  for (std::size_t i = 0; i < kNumVars; ++i) {
    const auto it = sec.find(std::string(kVariableNames[i]));
    if (it == sec.end())
      throw ConfigError("design file is missing " + std::string(kVariableNames[i]));
    a[i] = parse_scalar(it->second.value);
  }
  if (sec.size() != kNumVars) throw ConfigError("design file has unknown keys");
  return DesignVector::from_array(a);
}

inline std::string dump_design(const DesignVector& x) {
  std::ostringstream o;
  o << "[design]\n";
  const auto a = x.to_array();
  for (std::size_t i = 0; i < kNumVars; ++i)
    o << kVariableNames[i] << " = " << format_double(a[i]) << "\n";
  return o.str();
}

}  // namespace teachopt::config
