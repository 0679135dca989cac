#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "teachopt/errors.hpp"

namespace teachopt::kinematics {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Joint angles q1..q6 in radians.
using JointConfig = Vec6;

/// Rows are (vx, vy, vz, wx, wy, wz) in the base frame, columns joints 1..6.
using Jacobian = Mat6;

/// One row of a standard (distal) Denavit-Hartenberg table.
struct DHRow {
  double alpha = 0.0;
  double a = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

using DHTable = std::array<DHRow, 6>;

/// The six-joint teaching arm: two shoulder joints, an elbow, and a spherical wrist.
inline DHTable teaching_arm_dh() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  return {{
      {half_pi, 0.160, 0.0, 0.0},
      {0.0, 0.790, 0.0, 0.0},
      {half_pi, 0.155, 0.0, 0.0},
      {-half_pi, 0.0, 0.995, 0.0},
      {half_pi, 0.0, 0.0, 0.0},
      {0.0, 0.0, 0.0, 0.0},
  }};
}

struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

/// T = RotZ(q + theta_offset) * TransZ(d) * TransX(a) * RotX(alpha)
inline Mat4 dh_transform(const DHRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Mat4 t;
  t << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

struct ForwardResult {
  Pose pose;
  /// Cumulative transforms base->frame i for i = 1..6; frames[5] is the end effector.
  std::array<Mat4, 6> frames;
};

inline ForwardResult forward_kinematics(const DHTable& dh, const JointConfig& q) {
  ForwardResult out;
  Mat4 acc = Mat4::Identity();
  for (std::size_t i = 0; i < 6; ++i) {
    acc = acc * dh_transform(dh[i], q(static_cast<Eigen::Index>(i)));
    out.frames[i] = acc;
  }
  out.pose.position = acc.block<3, 1>(0, 3);
  out.pose.rotation = acc.block<3, 3>(0, 0);
  return out;
}

inline Jacobian geometric_jacobian(const ForwardResult& fk) {
  Jacobian j;
  const Vec3 p_ee = fk.pose.position;
  for (int i = 0; i < 6; ++i) {
    Vec3 z = Vec3::UnitZ();
    Vec3 p = Vec3::Zero();
    if (i > 0) {
      const Mat4& prev = fk.frames[static_cast<std::size_t>(i - 1)];
      z = prev.block<3, 1>(0, 2);
      p = prev.block<3, 1>(0, 3);
    }
    j.block<3, 1>(0, i) = z.cross(p_ee - p);
    j.block<3, 1>(3, i) = z;
  }
  return j;
}

inline Jacobian geometric_jacobian(const DHTable& dh, const JointConfig& q) {
  return geometric_jacobian(forward_kinematics(dh, q));
}

/// Error twist (dp, dw) that moves `current` toward `target`, both in the base frame.
inline Vec6 pose_error(const Pose& target, const Pose& current) {
  Vec6 e;
  e.head<3>() = target.position - current.position;
  const Eigen::AngleAxisd aa(Mat3(target.rotation * current.rotation.transpose()));
  e.tail<3>() = aa.angle() * aa.axis();
  return e;
}

/// Wraps every angle into (-pi, pi].
inline JointConfig normalize_angles(const JointConfig& q) {
  constexpr double pi = std::numbers::pi;
  JointConfig out;
  for (int i = 0; i < 6; ++i) {
    double a = std::remainder(q(i), 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    out(i) = a;
  }
  return out;
}

struct IkOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double damping = 0.01;
  double damping_floor = 1e-8;
};

struct IkResult {
  JointConfig q;
  double position_residual = 0.0;
  double orientation_residual = 0.0;
  int iterations = 0;
};

/// Damped least squares on the pose error twist. The damping starts at its base
/// value, doubles whenever a trial step would increase the residual and halves
/// after accepted steps, down to `damping_floor`. Relaxing below the base keeps
/// convergence fast next to singularities, where a fixed damping stalls.
inline IkResult solve_ik(const DHTable& dh, const Pose& target, const JointConfig& seed,
                         const IkOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ConfigError("inverse kinematics tolerance must be positive");
  if (!(opt.damping_floor > 0.0) || opt.damping_floor > opt.damping)
    throw ConfigError("inverse kinematics damping floor must lie in (0, damping]");

  JointConfig q = seed;
  Vec6 err = pose_error(target, forward_kinematics(dh, q).pose);
  double lambda = opt.damping;
  int iter = 0;
  const auto converged = [&](const Vec6& e) {
    return e.head<3>().norm() < opt.tol && e.tail<3>().norm() < opt.tol;
  };

  while (!converged(err)) {
    if (iter >= opt.max_iter) {
      throw NoConvergence(err.head<3>().norm(), err.tail<3>().norm(), iter);
    }
    ++iter;
    const Jacobian j = geometric_jacobian(dh, q);
    const Mat6 jjt = j * j.transpose() + lambda * lambda * Mat6::Identity();
    const Vec6 dq = j.transpose() * jjt.ldlt().solve(err);
    const JointConfig trial = q + dq;
    const Vec6 trial_err = pose_error(target, forward_kinematics(dh, trial).pose);
    if (trial_err.norm() < err.norm()) {
      q = trial;
      err = trial_err;
      lambda = std::max(opt.damping_floor, lambda * 0.5);
    } else {
      lambda *= 2.0;
    }
  }
  return {normalize_angles(q), err.head<3>().norm(), err.tail<3>().norm(), iter};
}

inline JointConfig inverse_kinematics(const DHTable& dh, const Pose& target,
                                      const JointConfig& seed, double tol = 1e-8,
                                      int max_iter = 200) {
  return solve_ik(dh, target, seed, {tol, max_iter, 0.01, 1e-8}).q;
}

// Tool orientation from an Euler triple.

enum class EulerConvention { IntrinsicZYX, IntrinsicZYZ };

inline std::string to_string(EulerConvention c) {
  return c == EulerConvention::IntrinsicZYX ? "ZYX" : "ZYZ";
}

inline Mat3 rotation_from_euler(EulerConvention c, const Vec3& angles) {
  using Eigen::AngleAxisd;
  const Vec3 last_axis = c == EulerConvention::IntrinsicZYX ? Vec3::UnitX() : Vec3::UnitZ();
  return (AngleAxisd(angles(0), Vec3::UnitZ()) * AngleAxisd(angles(1), Vec3::UnitY()) *
          AngleAxisd(angles(2), last_axis))
      .toRotationMatrix();
}

struct ToolOrientation {
  Mat3 rotation;
  EulerConvention convention;
};

/// True when the tool approach axis (rotation z column) points straight down.
inline bool points_at_ground(const Mat3& r, double tol = 1e-9) {
  return r.col(2).dot(-Vec3::UnitZ()) >= 1.0 - tol;
}

/// Resolves an Euler triple to a rotation whose approach axis points at the ground,
/// trying intrinsic Z-Y-X first and Z-Y-Z second.
inline ToolOrientation resolve_tool_orientation(const Vec3& euler) {
  for (const auto c : {EulerConvention::IntrinsicZYX, EulerConvention::IntrinsicZYZ}) {
    const Mat3 r = rotation_from_euler(c, euler);
    if (points_at_ground(r)) return {r, c};
  }
  throw ConfigError("Euler angles do not give a downward-pointing tool in ZYX or ZYZ");
}

}  // namespace teachopt::kinematics
