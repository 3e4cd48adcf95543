#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace softquad {

/// Base class for all softquad errors. Each error carries a stable
/// machine-readable category string that the CLI maps to exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// Input outside the mathematical domain of an operation (non-positive
/// cable length, negative bend angle, cable over geometric capability).
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};

/// A cable triple that is not realizable by the nozzle (bend angle beyond
/// the bend limit).
struct RealizabilityError : Error {
  explicit RealizabilityError(const std::string& w) : Error("realizability", w) {}
};

/// Euler-kinematics singularity (|pitch| >= 90 deg).
struct SingularityError : Error {
  explicit SingularityError(const std::string& w) : Error("singularity", w) {}
};

/// Allocation matrix numerically rank-deficient (degenerate geometry).
struct ConditioningError : Error {
  explicit ConditioningError(const std::string& w) : Error("conditioning", w) {}
};

/// Demanded force not producible by the actuator (e.g. non-positive axial
/// thrust component, negative thrust magnitude).
struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& w) : Error("infeasible", w) {}
};

/// Locked nozzle configuration leaves the reduced force/moment map
/// singular (no yaw authority).
struct SingularConfigError : Error {
  explicit SingularConfigError(const std::string& w) : Error("singular_config", w) {}
};

/// No bend angle within limits places the nozzle tips on the grasp target.
struct UnreachableError : Error {
  explicit UnreachableError(const std::string& w) : Error("unreachable", w) {}
};

/// Mode switch refused (requested lock is not flyable).
struct SwitchRejectedError : Error {
  explicit SwitchRejectedError(const std::string& w) : Error("switch_rejected", w) {}
};

/// Simulation state exceeded the crash-detection bound.
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& w) : Error("divergence", w) {}
};

/// Configuration file parse or validation failure.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

/// Filesystem failure surfaced verbatim.
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

}  // namespace softquad
