#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "teachopt/balance.hpp"
#include "teachopt/force.hpp"
#include "teachopt/model.hpp"
#include "teachopt/random.hpp"

namespace teachopt {

/// Violation added to cv when the force profile cannot be evaluated.
inline constexpr double kFailureViolation = 1e6;

/// Objectives (total mass kg, max operating force N, operating force range N) and
/// constraint residuals (Joint 5, Joint 3, Joint 2; N*m, all >= 0).
struct Evaluation {
  std::array<double, 3> f{};
  std::array<double, 3> g{};
  double cv = 0.0;
  std::optional<std::string> failure;

  bool feasible() const { return cv == 0.0; }
};

namespace detail {
inline Evaluation assemble(const DesignVector& x, const ManipulatorConstants& c,
                           std::optional<std::pair<double, double>> extremes,
                           std::optional<std::string> failure) {
  Evaluation e;
  e.f[0] = balance::total_mass(x, c);
  e.g = {balance::joint5_violation(x, c), balance::joint3_violation(x, c),
         balance::joint2_violation(x, c)};
  e.cv = e.g[0] + e.g[1] + e.g[2];
  if (extremes) {
    e.f[1] = extremes->first;
    e.f[2] = extremes->first - extremes->second;
  } else {
    e.f[1] = e.f[2] = std::numeric_limits<double>::infinity();
    e.cv += kFailureViolation;
    e.failure = std::move(failure);
  }
  return e;
}
}  // namespace detail

/// Evaluates a design from scratch, running the trajectory IK sweep itself.
inline Evaluation evaluate(const DesignVector& x, const ManipulatorConstants& c,
                           const force::TrajectorySpec& traj) {
  try {
    const auto p = force::trajectory_force_profile(x, c, traj);
    return detail::assemble(x, c, std::pair{p.max, p.min}, std::nullopt);
  } catch (const TrajectoryFailure& e) {
    return detail::assemble(x, c, std::nullopt, e.what());
  }
}

inline Evaluation evaluate(const DesignVector& x, const ManipulatorConstants& c,
                           const force::TrajectorySweep& sweep) {
  try {
    return detail::assemble(x, c, force::force_extremes(x, sweep), std::nullopt);
  } catch (const TrajectoryFailure& e) {
    return detail::assemble(x, c, std::nullopt, e.what());
  }
}

inline DesignVector random_design(const Bounds& b, Rng& rng) {
  DesignVector::Array a{};
  for (std::size_t i = 0; i < kNumVars; ++i) a[i] = rng.uniform(b[i].low, b[i].high);
  return DesignVector::from_array(a);
}

inline DesignVector::Array clamp(DesignVector::Array a, const Bounds& b) {
  for (std::size_t i = 0; i < kNumVars; ++i) a[i] = std::clamp(a[i], b[i].low, b[i].high);
  return a;
}

inline DesignVector clamp(const DesignVector& x, const Bounds& b) {
  return DesignVector::from_array(clamp(x.to_array(), b));
}

/// The three-objective, three-constraint manipulator design problem. The trajectory
/// sweep is computed at construction and shared by copies.
class TeachingProblem {
 public:
  static constexpr std::size_t kVars = kNumVars;
  static constexpr std::size_t kObjectives = 3;
  using Vector = DesignVector::Array;
  using Evaluation = teachopt::Evaluation;

  TeachingProblem(ManipulatorConstants constants, Bounds bounds, force::TrajectorySpec traj)
      : constants_(std::move(constants)), bounds_(bounds) {
    constants_.validate();
    bounds_.validate();
    sweep_ = std::make_shared<const force::TrajectorySweep>(
        force::sweep_trajectory(constants_.dh, traj));
  }

  TeachingProblem() : TeachingProblem({}, {}, {}) {}

  const Bounds& bounds() const { return bounds_; }
  double lower(std::size_t i) const { return bounds_[i].low; }
  double upper(std::size_t i) const { return bounds_[i].high; }
  const ManipulatorConstants& constants() const { return constants_; }
  const force::TrajectorySweep& sweep() const { return *sweep_; }

  Evaluation evaluate(const Vector& x) const {
    return teachopt::evaluate(DesignVector::from_array(x), constants_, *sweep_);
  }

  Evaluation evaluate(const DesignVector& x) const {
    return teachopt::evaluate(x, constants_, *sweep_);
  }

 private:
  ManipulatorConstants constants_;
  Bounds bounds_;
  std::shared_ptr<const force::TrajectorySweep> sweep_;
};

}  // namespace teachopt
