#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teachopt/errors.hpp"
#include "teachopt/kinematics.hpp"
#include "teachopt/model.hpp"

namespace teachopt::force {

using kinematics::JointConfig;
using kinematics::Mat3;
using kinematics::Mat6;
using kinematics::Pose;
using kinematics::Vec3;
using kinematics::Vec6;

/// End-effector force and moment, base frame.
struct SpatialForce {
  Vec3 f = Vec3::Zero();
  Vec3 m = Vec3::Zero();
};

/// Reciprocal condition estimate below which the Jacobian transpose is rejected.
inline constexpr double kMinRcond = 1e-8;

struct TrajectorySpec {
  double t_start = 0.0;
  double t_end = std::numbers::pi;
  int segments = 500;
  Vec3 euler = Vec3(0.0, std::numbers::pi, std::numbers::pi);
  /// IK seed for the first sample; later samples are seeded by their predecessor.
  JointConfig initial_seed = (JointConfig() << 0.0, 0.3, 0.3, 0.0, 1.0, 0.0).finished();

  void validate() const {
    if (!(t_end > t_start)) throw ConfigError("trajectory needs t_end > t_start");
    if (segments < 2) throw ConfigError("trajectory needs at least 2 segments");
  }

  /// Evenly spaced samples including both ends; there are segments + 1 of them.
  double sample(int i) const {
    if (i == segments) return t_end;
    return t_start + (t_end - t_start) * static_cast<double>(i) / static_cast<double>(segments);
  }
};

inline Vec3 trajectory_position(double t) {
  return {1.5 - 0.25 * (1.0 - std::cos(t)),
          -0.25 + 0.5 * (1.0 - std::cos(t / 2.0)),
          0.5 + 0.5 * (std::cos(t / 2.0) - 1.0)};
}

inline Pose trajectory_point(double t, const Mat3& tool_rotation) {
  return {trajectory_position(t), tool_rotation};
}

inline Pose trajectory_point(const TrajectorySpec& spec, double t) {
  return trajectory_point(t, kinematics::resolve_tool_orientation(spec.euler).rotation);
}

inline Vec6 friction_torque_vector(const DesignVector& x) {
  Vec6 tau;
  tau << x.T1, x.T2, x.T3, 0.0, 0.0, 0.0;
  return tau;
}

/// Factorized J^T at one configuration; solves J^T F = tau for F.
class WrenchSolver {
 public:
  explicit WrenchSolver(const kinematics::Jacobian& j) : jt_(j.transpose()), lu_(jt_) {
    rcond_ = lu_.rcond();
  }

  double rcond() const { return rcond_; }
  bool singular() const { return !(rcond_ >= kMinRcond); }
  const Mat6& jacobian_transpose() const { return jt_; }

  SpatialForce solve(const Vec6& tau) const {
    if (singular()) throw SingularConfiguration(rcond_);
    const Vec6 w = lu_.solve(tau);
    return {w.head<3>(), w.tail<3>()};
  }

 private:
  Mat6 jt_;
  Eigen::PartialPivLU<Mat6> lu_;
  double rcond_ = 0.0;
};

inline SpatialForce operating_wrench(const kinematics::Jacobian& j, const Vec6& tau) {
  return WrenchSolver(j).solve(tau);
}

inline SpatialForce operating_wrench(const kinematics::DHTable& dh, const JointConfig& q,
                                     const Vec6& tau) {
  return operating_wrench(kinematics::geometric_jacobian(dh, q), tau);
}

/// Operating force: norm of the force part only.
inline double force_magnitude(const SpatialForce& w) { return w.f.norm(); }

struct ForceSample {
  double t = 0.0;
  double fc = 0.0;
  JointConfig q = JointConfig::Zero();
  double rcond = 0.0;
};

struct ForceProfile {
  std::vector<ForceSample> samples;
  double max = 0.0;
  double min = 0.0;

  double range() const { return max - min; }
  double f2() const { return max; }
  double f3() const { return max - min; }
};

namespace detail {
inline void finish_profile(ForceProfile& p) {
  p.max = -std::numeric_limits<double>::infinity();
  p.min = std::numeric_limits<double>::infinity();
  for (const auto& s : p.samples) {
    p.max = std::max(p.max, s.fc);
    p.min = std::min(p.min, s.fc);
  }
}
}  // namespace detail

/// Direct evaluation: IK, Jacobian and a wrench solve at every sample.
/// Throws TrajectoryFailure naming the sample that could not be evaluated.
inline ForceProfile trajectory_force_profile(const DesignVector& x, const ManipulatorConstants& c,
                                             const TrajectorySpec& traj) {
  traj.validate();
  const Mat3 tool = kinematics::resolve_tool_orientation(traj.euler).rotation;
  const Vec6 tau = friction_torque_vector(x);
  ForceProfile out;
  out.samples.reserve(static_cast<std::size_t>(traj.segments) + 1);
  JointConfig seed = traj.initial_seed;
  for (int i = 0; i <= traj.segments; ++i) {
    const double t = traj.sample(i);
    try {
      const JointConfig q = kinematics::inverse_kinematics(c.dh, trajectory_point(t, tool), seed);
      const WrenchSolver solver(kinematics::geometric_jacobian(c.dh, q));
      out.samples.push_back({t, force_magnitude(solver.solve(tau)), q, solver.rcond()});
      seed = q;
    } catch (const NoConvergence& e) {
      throw TrajectoryFailure(t, std::string("unreachable: ") + e.what());
    } catch (const SingularConfiguration& e) {
      throw TrajectoryFailure(t, e.what());
    }
  }
  detail::finish_profile(out);
  return out;
}

/// Per-sample kinematics of a trajectory sweep. The sweep depends only on the arm
/// and the trajectory, never on the design, so it is computed once per problem.
struct SweepSample {
  double t = 0.0;
  Vec3 target = Vec3::Zero();
  bool reachable = false;
  JointConfig q = JointConfig::Zero();
  double position_residual = 0.0;
  double orientation_residual = 0.0;
  int iterations = 0;
  std::optional<WrenchSolver> solver;

  bool usable() const { return reachable && solver && !solver->singular(); }
};

struct TrajectorySweep {
  TrajectorySpec spec;
  kinematics::ToolOrientation tool;
  std::vector<SweepSample> samples;

  /// First sample that cannot be used for a wrench solve, if any.
  std::optional<std::size_t> first_failure() const {
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (!samples[i].usable()) return i;
    return std::nullopt;
  }

  double min_rcond() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& s : samples)
      if (s.solver) r = std::min(r, s.solver->rcond());
    return r;
  }

  double worst_residual() const {
    double r = 0.0;
    for (const auto& s : samples)
      r = std::max({r, s.position_residual, s.orientation_residual});
    return r;
  }

  std::string failure_reason(std::size_t i) const {
    const auto& s = samples[i];
    if (!s.reachable) return "unreachable (inverse kinematics did not converge)";
    return "singular configuration (rcond " + std::to_string(s.solver->rcond()) + ")";
  }
};

/// Runs the seeded IK chain along the whole trajectory without throwing; an
/// unreachable sample reseeds its successor from the last good solution.
inline TrajectorySweep sweep_trajectory(const kinematics::DHTable& dh, const TrajectorySpec& traj) {
  traj.validate();
  TrajectorySweep sweep{traj, kinematics::resolve_tool_orientation(traj.euler), {}};
  sweep.samples.reserve(static_cast<std::size_t>(traj.segments) + 1);
  JointConfig seed = traj.initial_seed;
  for (int i = 0; i <= traj.segments; ++i) {
    SweepSample s;
    s.t = traj.sample(i);
    s.target = trajectory_position(s.t);
    try {
      const auto ik = kinematics::solve_ik(dh, trajectory_point(s.t, sweep.tool.rotation), seed);
      s.reachable = true;
      s.q = ik.q;
      s.position_residual = ik.position_residual;
      s.orientation_residual = ik.orientation_residual;
      s.iterations = ik.iterations;
      s.solver.emplace(kinematics::geometric_jacobian(dh, ik.q));
      seed = ik.q;
    } catch (const NoConvergence& e) {
      s.position_residual = e.position_residual;
      s.orientation_residual = e.orientation_residual;
      s.iterations = e.iterations;
    }
    sweep.samples.push_back(std::move(s));
  }
  return sweep;
}

/// Same result as trajectory_force_profile, reusing a precomputed sweep.
inline ForceProfile force_profile(const DesignVector& x, const TrajectorySweep& sweep) {
  if (const auto bad = sweep.first_failure())
    throw TrajectoryFailure(sweep.samples[*bad].t, sweep.failure_reason(*bad));
  const Vec6 tau = friction_torque_vector(x);
  ForceProfile out;
  out.samples.reserve(sweep.samples.size());
  for (const auto& s : sweep.samples)
    out.samples.push_back({s.t, force_magnitude(s.solver->solve(tau)), s.q, s.solver->rcond()});
  detail::finish_profile(out);
  return out;
}

/// Only (max, min) of the operating force; the optimizer's inner loop.
inline std::pair<double, double> force_extremes(const DesignVector& x,
                                                const TrajectorySweep& sweep) {
  if (const auto bad = sweep.first_failure())
    throw TrajectoryFailure(sweep.samples[*bad].t, sweep.failure_reason(*bad));
  const Vec6 tau = friction_torque_vector(x);
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& s : sweep.samples) {
    const double fc = force_magnitude(s.solver->solve(tau));
    hi = std::max(hi, fc);
    lo = std::min(lo, fc);
  }
  return {hi, lo};
}

}  // namespace teachopt::force
