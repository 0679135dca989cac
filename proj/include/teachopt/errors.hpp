#pragma once

#include <stdexcept>
#include <string>

namespace teachopt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, bounds, or run parameters. Maps to CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Failure of the physical or numerical model. Maps to CLI exit code 3.
struct DomainError : Error {
  using Error::Error;
};

struct NoConvergence : DomainError {
  NoConvergence(double position_residual, double orientation_residual, int iterations)
      : DomainError("inverse kinematics did not converge after " + std::to_string(iterations) +
                    " iterations (position residual " + std::to_string(position_residual) +
                    " m, orientation residual " + std::to_string(orientation_residual) + " rad)"),
        position_residual(position_residual),
        orientation_residual(orientation_residual),
        iterations(iterations) {}

  double position_residual;
  double orientation_residual;
  int iterations;
};

struct SingularConfiguration : DomainError {
  explicit SingularConfiguration(double rcond)
      : DomainError("Jacobian transpose is singular (rcond " + std::to_string(rcond) + ")"),
        rcond(rcond) {}

  double rcond;
};

/// A trajectory sample failed; `t` names the trajectory parameter.
struct TrajectoryFailure : DomainError {
  TrajectoryFailure(double t, const std::string& why)
      : DomainError("trajectory sample t=" + std::to_string(t) + ": " + why), t(t) {}

  double t;
};

struct DegenerateData : DomainError {
  using DomainError::DomainError;
};

struct InsufficientFront : DomainError {
  using DomainError::DomainError;
};

}  // namespace teachopt
