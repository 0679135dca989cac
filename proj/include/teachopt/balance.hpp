#pragma once

// Static gravity balance of Joints 2, 3 and 5.
//
// Every gravity and counter moment at Joints 3 and 5 scales with the cosine of the
// joint angle, so each balance condition reduces to a comparison of angle-free
// coefficients. Joint 2 is balanced by a pneumatic spring balancer; once the
// cylinder preload cancels the square-root term, its imbalance is
// |Me*g - k*Hb| * L2 * |cos q2|.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "teachopt/errors.hpp"
#include "teachopt/model.hpp"

namespace teachopt::balance {

/// Angle-free moment coefficients (N*m); the actual moments are coef * cos(q).
struct MomentCoefficients {
  double gravity_coef = 0.0;
  double counter_coef = 0.0;
};

/// Allowed relative imbalance at Joint 5.
inline constexpr double kJoint5Tolerance = 0.05;

inline MomentCoefficients joint5_coefficients(const DesignVector& x,
                                              const ManipulatorConstants& c) {
  return {
      (c.m(6) + c.mL(5)) * c.g * c.L5,
      x.mA * c.g * x.LA + x.LA * x.LA * c.rhoA * c.g / 2.0,
  };
}

inline double joint5_violation(const DesignVector& x, const ManipulatorConstants& c) {
  const auto m = joint5_coefficients(x, c);
  return std::max(0.0, std::abs(m.gravity_coef - m.counter_coef) -
                           kJoint5Tolerance * m.gravity_coef);
}

inline MomentCoefficients joint3_coefficients(const DesignVector& x,
                                              const ManipulatorConstants& c) {
  const double wrist = x.mA + c.m(6) + c.mL(5) + c.m(5) + x.LA * c.rhoA;
  const double gravity = (wrist * (c.L3 + c.L4) + c.m(4) * c.L3 + c.mL(3) * c.L3 / 2.0 +
                          (2.0 * c.L3 + c.L4) * c.mL(4) / 2.0) *
                         c.g;
  return {gravity, x.mB * c.g * x.LB + x.LB * x.LB * c.rhoB * c.g / 2.0};
}

/// max over q3 of |G3 - P3| minus the disk torque T3, floored at zero.
inline double joint3_violation(const DesignVector& x, const ManipulatorConstants& c) {
  const auto m = joint3_coefficients(x, c);
  return std::max(0.0, std::abs(m.gravity_coef - m.counter_coef) - x.T3);
}

/// Length of the Joint-2 balancer for joint angle q2.
inline double balancer_length(double q2, double Hb, double L2) {
  const double r = Hb * Hb + L2 * L2 - 2.0 * Hb * L2 * std::cos(std::numbers::pi / 2.0 - q2);
  if (r < -1e-12) throw DomainError("balancer triangle has a negative squared length");
  return std::sqrt(std::max(0.0, r));
}

/// Cylinder force that cancels the angle-dependent square-root term.
inline double cylinder_preload(const DesignVector& x, const ManipulatorConstants& c) {
  return x.k * (c.L2 - x.Hb);
}

inline double equivalent_mass(const DesignVector& x, const ManipulatorConstants& c) {
  return c.m(3) + c.m(4) + c.m(5) + c.m(6) + x.mA + x.mB + x.LA * c.rhoA + x.LB * c.rhoB +
         c.mL(3) + c.mL(4) + c.mL(5) + c.mL(2) / 2.0;
}

/// |G2 - P2| at a single angle with an explicit cylinder force `b`, keeping the full
/// square-root term.
inline double joint2_imbalance(double q2, const DesignVector& x, const ManipulatorConstants& c,
                               double b) {
  const double me_g = equivalent_mass(x, c) * c.g;
  const double cq = std::cos(q2);
  const double lk = balancer_length(q2, x.Hb, c.L2);
  // Sign chosen so that b = k*(L2 - Hb) is the cancelling preload.
  const double numerator = (x.k * (c.L2 - x.Hb) - b) * x.Hb * c.L2 * cq;
  // lk vanishes only for Hb = L2 at q2 = pi/2, where cos q2 = 0 as well.
  const double spring_term = lk > 0.0 ? numerator / lk : 0.0;
  return std::abs((me_g - x.k * x.Hb) * c.L2 * cq + spring_term);
}

inline std::vector<double> imbalance_profile_joint2(const DesignVector& x,
                                                    const ManipulatorConstants& c,
                                                    std::span<const double> q2_grid) {
  const double b = cylinder_preload(x, c);
  std::vector<double> out;
  out.reserve(q2_grid.size());
  for (double q2 : q2_grid) out.push_back(joint2_imbalance(q2, x, c, b));
  return out;
}

/// Peak Joint 2 imbalance moment, reached at |cos q2| = 1.
inline double joint2_residual(const DesignVector& x, const ManipulatorConstants& c) {
  return std::abs(equivalent_mass(x, c) * c.g - x.k * x.Hb) * c.L2;
}

inline double joint2_violation(const DesignVector& x, const ManipulatorConstants& c) {
  return std::max(0.0, joint2_residual(x, c) - x.T2);
}

inline double total_mass(const DesignVector& x, const ManipulatorConstants& c) {
  double m = 0.0;
  for (double v : c.joint_mass) m += v;
  for (double v : c.link_mass) m += v;
  return m + x.mA + x.mB + x.LA * c.rhoA + x.LB * c.rhoB;
}

}  // namespace teachopt::balance
