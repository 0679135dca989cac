#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "teachopt/errors.hpp"
#include "teachopt/kinematics.hpp"

namespace teachopt {

inline constexpr std::size_t kNumVars = 9;

inline constexpr std::array<std::string_view, kNumVars> kVariableNames = {
    "mA", "mB", "LA", "LB", "k", "Hb", "T1", "T2", "T3"};

/// The nine design variables: counterweight masses and rod lengths, balancer spring
/// stiffness and virtual link length, and the three friction-disk torques.
struct DesignVector {
  double mA = 0.0;  // kg
  double mB = 0.0;  // kg
  double LA = 0.0;  // m
  double LB = 0.0;  // m
  double k = 0.0;   // N/m
  double Hb = 0.0;  // m
  double T1 = 0.0;  // N*m
  double T2 = 0.0;  // N*m
  double T3 = 0.0;  // N*m

  using Array = std::array<double, kNumVars>;

  Array to_array() const { return {mA, mB, LA, LB, k, Hb, T1, T2, T3}; }

  static DesignVector from_array(const Array& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]};
  }

  friend bool operator==(const DesignVector&, const DesignVector&) = default;
};

/// The hand-tuned design the device shipped with.
inline DesignVector expert_design() {
  return {1.6, 25.0, 0.185, 0.462, 3730.0, 0.15, 75.7, 75.7, 75.7};
}

struct ManipulatorConstants {
  std::array<double, 6> joint_mass = {4.136, 8.225, 9.665, 1.249, 4.185, 2.013};  // m1..m6
  std::array<double, 5> link_mass = {0.631, 2.071, 1.816, 0.340, 0.358};          // mL1..mL5
  double L2 = 0.79;
  double L3 = 0.155;  // a3 of the D-H table
  double L4 = 0.995;  // d4 of the D-H table
  double L5 = 0.25;   // not measured on the device; configurable
  double rhoA = 1.8;  // kg/m
  double rhoB = 3.7;  // kg/m
  double g = 9.8;
  kinematics::DHTable dh = kinematics::teaching_arm_dh();

  double m(int i) const { return joint_mass.at(static_cast<std::size_t>(i - 1)); }
  double mL(int i) const { return link_mass.at(static_cast<std::size_t>(i - 1)); }

  void validate() const {
    for (double v : joint_mass)
      if (!(v > 0.0)) throw ConfigError("joint masses must be positive");
    for (double v : link_mass)
      if (!(v > 0.0)) throw ConfigError("link masses must be positive");
    for (double v : {L2, L3, L4, L5, rhoA, rhoB, g})
      if (!(v > 0.0)) throw ConfigError("lengths, densities and g must be positive");
  }
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Per-variable box bounds, in DesignVector field order.
struct Bounds {
  std::array<Interval, kNumVars> range = {{
      {0.3, 20.0},
      {19.0, 50.0},
      {0.11, 0.5},
      {0.2, 0.8},
      {0.0, 15000.0},
      {0.11, 0.18},
      {0.0, 90.0},
      {0.0, 90.0},
      {0.0, 90.0},
  }};

  const Interval& operator[](std::size_t i) const { return range[i]; }
  Interval& operator[](std::size_t i) { return range[i]; }

  double span(std::size_t i) const { return range[i].high - range[i].low; }

  void validate() const {
    for (std::size_t i = 0; i < kNumVars; ++i) {
      if (!(range[i].low <= range[i].high))
        throw ConfigError("bounds for " + std::string(kVariableNames[i]) + " are inverted");
    }
  }
};

}  // namespace teachopt
