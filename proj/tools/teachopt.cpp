// teachopt: evaluate, optimize and mine teaching-manipulator designs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "teachopt/teachopt.hpp"

namespace fs = std::filesystem;
using namespace teachopt;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> pop;
  std::optional<std::size_t> gens;
  bool quiet = false;
};

void print_warnings(const config::AppConfig& cfg) {
  for (const auto& w : cfg.warnings()) std::cerr << w << '\n';
}

config::AppConfig load_app_config(const CommonOptions& o) {
  config::AppConfig cfg = o.config_path.empty() ? config::AppConfig{}
                                                : config::load_config(o.config_path);
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.pop) cfg.run.pop_size = *o.pop;
  if (o.gens) cfg.run.generations = *o.gens;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// evaluate

struct EvaluateOptions {
  bool expert = false;
  std::string design;
  std::string profile;
};

int cmd_evaluate(const CommonOptions& common, const EvaluateOptions& o) {
  const auto cfg = load_app_config(common);
  print_warnings(cfg);

  DesignVector x;
  std::string label;
  if (!o.design.empty()) {
    x = config::parse_design(config::read_file(o.design));
    label = o.design;
  } else if (o.expert || cfg.expert_fixture) {
    x = expert_design();
    label = "expert";
  } else {
    throw ConfigError("evaluate needs --design FILE or --expert");
  }
  const auto a = x.to_array();
  for (std::size_t i = 0; i < kNumVars; ++i)
    if (a[i] < cfg.bounds[i].low || a[i] > cfg.bounds[i].high)
      std::cerr << "WARNING: " << kVariableNames[i] << " = " << config::format_double(a[i])
                << " lies outside [" << config::format_double(cfg.bounds[i].low) << ", "
                << config::format_double(cfg.bounds[i].high) << "]\n";

  force::ForceProfile profile;
  try {
    profile = force::trajectory_force_profile(x, cfg.constants, cfg.trajectory);
  } catch (const TrajectoryFailure& e) {
    std::cerr << "error: evaluation failed: " << e.what() << '\n';
    return 3;
  }
  const auto ev = detail::assemble(x, cfg.constants, std::pair{profile.max, profile.min},
                                   std::nullopt);
  const auto hash = config::config_hash(cfg);

  std::cout << "design " << label << ":";
  for (std::size_t i = 0; i < kNumVars; ++i)
    std::cout << ' ' << kVariableNames[i] << '=' << config::format_double(a[i]);
  std::cout << '\n'
            << "f1 total mass            " << num(ev.f[0]) << " kg\n"
            << "f2 max operating force   " << num(ev.f[1]) << " N\n"
            << "f3 operating force range " << num(ev.f[2]) << " N\n"
            << "g1 joint 5 violation     " << num(ev.g[0]) << " N*m\n"
            << "g2 joint 3 violation     " << num(ev.g[1]) << " N*m\n"
            << "g3 joint 2 violation     " << num(ev.g[2]) << " N*m\n"
            << "joint 2 residual         " << num(balance::joint2_residual(x, cfg.constants))
            << " N*m (T2 " << num(x.T2) << ")\n"
            << "cv                       " << num(ev.cv) << '\n'
            << "feasible                 " << (ev.feasible() ? "yes" : "no") << '\n'
            << "config_hash " << hash << " seed " << cfg.run.seed << '\n';

  if (!o.profile.empty()) {
    std::ofstream out(o.profile, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + o.profile);
    archive::write_profile_csv(out, profile, hash, cfg.run.seed);
  }
  return 0;
}

// optimize

struct OptimizeOptions {
  std::string resume;
  std::optional<std::size_t> csv_every;
  std::vector<double> hv_reference;
};

int cmd_optimize(const CommonOptions& common, const OptimizeOptions& o) {
  const auto started = std::chrono::steady_clock::now();
  config::AppConfig cfg;
  std::optional<archive::Snapshot> snap;
  fs::path dir;

  if (!o.resume.empty()) {
    if (!common.config_path.empty() || common.seed || common.pop)
      throw ConfigError("--config, --seed and --pop cannot be combined with --resume");
    dir = o.resume;
    const auto path = dir / "snapshot.json";
    if (!fs::exists(path)) throw ConfigError("no snapshot at " + path.string());
    archive::json doc;
    try {
      doc = archive::json::parse(config::read_file(path.string()));
    } catch (const archive::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    auto loaded = archive::snapshot_from_document(doc);
    cfg = std::move(loaded.config);
    snap = std::move(loaded.snapshot);
    if (common.gens) cfg.run.generations = *common.gens;
    if (o.csv_every) cfg.csv_every = *o.csv_every;
    cfg.output_dir = dir.string();
    cfg.validate();
    if (snap->generation > cfg.run.generations)
      throw ConfigError("snapshot is at generation " + std::to_string(snap->generation) +
                        ", beyond the requested " + std::to_string(cfg.run.generations));
  } else {
    cfg = load_app_config(common);
    if (o.csv_every) cfg.csv_every = *o.csv_every;
    cfg.validate();
    dir = cfg.output_dir;
  }
  print_warnings(cfg);
  fs::create_directories(dir);

  const TeachingProblem problem(cfg.constants, cfg.bounds, cfg.trajectory);
  if (const auto bad = problem.sweep().first_failure()) {
    const auto& s = problem.sweep().samples[*bad];
    throw DomainError("trajectory sample t = " + config::format_double(s.t) + " is " +
                      problem.sweep().failure_reason(*bad));
  }

  moea::EngineOptions engine_options;
  engine_options.threads = default_thread_count();
  if (!o.hv_reference.empty()) engine_options.hv_reference = o.hv_reference;
  moea::Nsga2<TeachingProblem> engine(problem, cfg.run, engine_options);

  const auto hash = config::config_hash(cfg);
  const auto gen_path = dir / "generations.csv";
  const auto stats_path = dir / "stats.csv";
  const auto snap_path = dir / "snapshot.json";

  if (snap) {
    // the last generation of a stopped run is always written; drop it when the
    // csv_every cadence would not have
    const auto g = snap->generation;
    archive::truncate_generation_csv(gen_path, g % cfg.csv_every == 0 || g == 0 ? g : g - 1);
    archive::truncate_generation_csv(stats_path, snap->generation);
    std::ifstream in(stats_path);
    snap->stats = archive::read_stats_csv(in);
    engine.restore(*snap);
    if (!common.quiet)
      std::cout << "resuming " << dir.string() << " at generation " << snap->generation << " of "
                << cfg.run.generations << '\n';
  } else {
    write_text(gen_path,
               archive::provenance_line(hash, cfg.run.seed) + archive::generation_csv_header());
    write_text(stats_path,
               archive::provenance_line(hash, cfg.run.seed) + archive::stats_csv_header());
  }

  std::ofstream gen_csv(gen_path, std::ios::app);
  std::ofstream stats_csv(stats_path, std::ios::app);
  if (!gen_csv || !stats_csv) throw ConfigError("cannot append to archive in " + dir.string());

  const auto observer = [&](const moea::Nsga2<TeachingProblem>& e) {
    const auto gen = e.generation();
    if (gen % cfg.csv_every == 0 || gen == cfg.run.generations) {
      const auto& pop = e.population();
      for (std::size_t i = 0; i < pop.size(); ++i) archive::write_member_row(gen_csv, gen, i, pop[i]);
      gen_csv.flush();
    }
    const auto& st = e.stats().back();
    archive::write_stats_row(stats_csv, st);
    stats_csv.flush();
    auto s = e.snapshot();
    s.stats.clear();  // stats.csv holds them
    archive::write_atomically(snap_path, archive::snapshot_document(cfg, s).dump() + "\n");
    if (!common.quiet && (gen % 100 == 0 || gen == cfg.run.generations)) {
      std::cout << "gen " << gen << "/" << cfg.run.generations << "  feasible "
                << num(100.0 * st.feasible_fraction, 1) << "%  front " << st.front_size;
      if (!st.best.empty() && st.front_size > 0)
        std::cout << "  best f1 " << num(st.best[0], 3) << " f2 " << num(st.best[1], 3) << " f3 "
                  << num(st.best[2], 3);
      std::cout << '\n' << std::flush;
    }
  };
  engine.run(observer);

  const auto result = engine.archive();
  std::optional<Evaluation> expert;
  if (cfg.expert_fixture) expert = problem.evaluate(expert_design());
  write_text(dir / "front.json", archive::front_document(cfg, result, expert).dump(2) + "\n");
  {
    std::ofstream out(dir / "front.csv", std::ios::trunc);
    archive::write_front_csv(out, cfg, result);
  }

  std::size_t dominating = 0;
  if (expert)
    for (const auto& m : result.front)
      if (m.eval.f[0] < expert->f[0] && m.eval.f[1] < expert->f[1] && m.eval.f[2] < expert->f[2])
        ++dominating;

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  archive::json info = {{"config_hash", hash},
                        {"seed", cfg.run.seed},
                        {"generations", result.generations},
                        {"resumed_from", snap ? archive::json(snap->generation) : nullptr},
                        {"threads", engine_options.threads},
                        {"wall_seconds", seconds}};
  write_text(dir / "run_info.json", info.dump(2) + "\n");

  if (!common.quiet) {
    std::cout << "front " << result.front.size() << " designs";
    if (expert) std::cout << ", " << dominating << " strictly dominate the expert design";
    std::cout << "\nwrote " << (dir / "front.json").string() << " in " << num(seconds, 1)
              << " s\n";
  }
  return 0;
}

// innovize

int cmd_innovize(const CommonOptions& common, const std::string& path) {
  const auto front = archive::load_front(path);
  const auto report =
      innovization::build_report(front.points, front.bounds, front.run_id, front.seed);

  fs::path dir = common.out;
  if (dir.empty()) dir = fs::is_directory(path) ? fs::path(path) : fs::path(path).parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);

  const auto text = archive::report_to_text(report);
  write_text(dir / "rules.txt", text);
  write_text(dir / "rules.json", archive::report_to_json(report).dump(2) + "\n");
  for (const auto& p : report.pairs) {
    std::ofstream out(dir / ("scatter_" + p.x_name + "_" + p.y_name + ".csv"), std::ios::trunc);
    archive::write_scatter_csv(out, report, front.points, p.x_name, p.y_name);
  }
  if (!common.quiet) std::cout << text;
  return 0;
}

// check-trajectory

struct TrajectoryOptions {
  std::optional<double> t_start;
  std::optional<double> t_end;
  std::optional<int> segments;
  bool samples = false;
};

int cmd_check_trajectory(const CommonOptions& common, const TrajectoryOptions& o) {
  auto cfg = load_app_config(common);
  if (o.t_start) cfg.trajectory.t_start = *o.t_start;
  if (o.t_end) cfg.trajectory.t_end = *o.t_end;
  if (o.t_start || o.t_end) cfg.t_range_defaulted = false;
  if (o.segments) cfg.trajectory.segments = *o.segments;
  cfg.validate();
  print_warnings(cfg);

  const auto sweep = force::sweep_trajectory(cfg.constants.dh, cfg.trajectory);
  std::vector<double> unreachable, below_floor;
  for (const auto& s : sweep.samples) {
    if (!s.usable()) unreachable.push_back(s.t);
    if (s.target.z() < 0.0) below_floor.push_back(s.t);
  }

  const auto& t = cfg.trajectory;
  std::cout << "trajectory t in [" << config::format_double(t.t_start) << ", "
            << config::format_double(t.t_end) << "], " << t.segments << " segments, "
            << sweep.samples.size() << " samples\n"
            << "tool orientation resolved as " << kinematics::to_string(sweep.tool.convention)
            << '\n'
            << "usable " << sweep.samples.size() - unreachable.size() << "/"
            << sweep.samples.size() << '\n'
            << "min rcond " << config::format_double(sweep.min_rcond()) << '\n'
            << "worst IK residual " << config::format_double(sweep.worst_residual()) << '\n';

  if (o.samples || !common.out.empty()) {
    std::ostringstream csv;
    csv << archive::provenance_line(config::config_hash(cfg), cfg.run.seed)
        << "t,X,Y,Z,reachable,q1,q2,q3,q4,q5,q6,rcond,position_residual,orientation_residual,"
           "iterations\n";
    for (const auto& s : sweep.samples) {
      csv << archive::csv_double(s.t);
      for (int i = 0; i < 3; ++i) csv << ',' << archive::csv_double(s.target(i));
      csv << ',' << (s.usable() ? 1 : 0);
      for (int i = 0; i < 6; ++i) csv << ',' << archive::csv_double(s.q(i));
      csv << ',' << archive::csv_double(s.solver ? s.solver->rcond() : 0.0) << ','
          << archive::csv_double(s.position_residual) << ','
          << archive::csv_double(s.orientation_residual) << ',' << s.iterations << '\n';
    }
    if (o.samples) std::cout << csv.str();
    if (!common.out.empty()) {
      fs::create_directories(common.out);
      write_text(fs::path(common.out) / "trajectory_check.csv", csv.str());
    }
  }

  if (!below_floor.empty()) {
    std::cout << "WARNING: " << below_floor.size()
              << " samples leave the workspace with Z < 0, t from "
              << config::format_double(below_floor.front()) << " to "
              << config::format_double(below_floor.back()) << '\n';
  }
  if (!unreachable.empty()) {
    std::cerr << "error: " << unreachable.size() << " samples unusable at t =";
    for (double v : unreachable) std::cerr << ' ' << config::format_double(v);
    std::cerr << '\n';
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design optimization and rule mining for a passive teaching manipulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "teachopt 1.0");

  CommonOptions common;
  app.add_option("--config", common.config_path, "Configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Random seed");
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--pop", common.pop, "Population size");
  app.add_option("--gens", common.gens, "Number of generations");
  app.add_flag("--quiet,-q", common.quiet, "Suppress progress output");

  EvaluateOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one design");
  evaluate->add_flag("--expert", eval_opts.expert, "Evaluate the expert design fixture");
  evaluate->add_option("--design", eval_opts.design, "Design file with a [design] section")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--profile", eval_opts.profile, "Write the force profile CSV here");
  evaluate->get_option("--expert")->excludes("--design");

  OptimizeOptions opt_opts;
  auto* optimize = app.add_subcommand("optimize", "Run constrained NSGA-II");
  optimize->add_option("--resume", opt_opts.resume, "Continue the run archived in DIR")
      ->check(CLI::ExistingDirectory);
  optimize->add_option("--csv-every", opt_opts.csv_every,
                       "Write the population to generations.csv every N generations");
  optimize->add_option("--hv-ref", opt_opts.hv_reference,
                       "Reference point for per-generation hypervolume (3 values)")
      ->expected(3)
      ->delimiter(',');

  std::string archive_path;
  auto* innovize = app.add_subcommand("innovize", "Extract design rules from a front");
  innovize->add_option("archive", archive_path, "Run directory, front JSON or CSV")->required();

  TrajectoryOptions traj_opts;
  auto* check = app.add_subcommand("check-trajectory", "Check trajectory reachability");
  check->add_option("--t-start", traj_opts.t_start, "Trajectory start parameter");
  check->add_option("--t-end", traj_opts.t_end, "Trajectory end parameter");
  check->add_option("--segments", traj_opts.segments, "Number of segments");
  check->add_flag("--samples", traj_opts.samples, "Print every sample");

  for (auto* sub : {evaluate, optimize, innovize, check}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*evaluate) return cmd_evaluate(common, eval_opts);
    if (*optimize) return cmd_optimize(common, opt_opts);
    if (*innovize) return cmd_innovize(common, archive_path);
    if (*check) return cmd_check_trajectory(common, traj_opts);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
