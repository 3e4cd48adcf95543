#pragma once

#include <Eigen/Dense>
#include <array>

#include "softquad/errors.hpp"
#include "softquad/frames.hpp"
#include "softquad/nozzle_kinematics.hpp"

namespace softquad {

/// Ratio of the fixed equivalent thrust lever to the nozzle length: the
/// midpoint of the exact lever's range over bends in (0, 45 deg].
inline constexpr double kEquivalentLeverRatio = 0.5135;

/// Physical parameters of the craft. Defaults are the reference vehicle.
struct VehicleParams {
  double mass = 1.2;      // kg
  double gravity = 9.8;   // m/s^2
  double inertia_xx = 0.00913;  // kg*m^2
  double inertia_yy = 0.00918;
  double inertia_zz = 0.01245;
  double arm_half_diagonal = 0.10;     // l, m: airframe center to nozzle mount
  double nozzle_length = 0.12;         // s, m
  double cable_offset_radius = 0.025;  // h, m
  double thrust_coeff = 1.0e-6;        // c_t, N*s^2 (hover at ~1715 rad/s)
  double roll_limit = deg2rad(30.0);   // phi_max
  double pitch_limit = deg2rad(30.0);  // theta_max
  double alpha_max = deg2rad(45.0);    // nozzle bend limit
  double max_cable_length = 0.15;      // s_max, m
  double omega_min = 0.0;              // rad/s
  double omega_max = 3500.0;           // rad/s
  // When true, Euler-angle rates are identified with body rates (the
  // small-angle attitude kinematics) instead of the exact rate matrix.
  bool small_angle_attitude_kinematics = false;

  void validate() const;
  NozzleGeometry nozzle(int i) const;
  std::array<NozzleGeometry, 4> nozzles() const;
  /// Rotor speed at which four straight nozzles exactly carry the weight.
  double hover_rotor_speed() const;
  /// Planar moment arm c = (sqrt(2)/2) * l.
  double planar_arm() const { return std::sqrt(0.5) * arm_half_diagonal; }
  /// Fixed equivalent thrust lever a = 0.5135 * s.
  double equivalent_lever_fixed() const { return kEquivalentLeverRatio * nozzle_length; }
};

/// Rigid-body state. Position/velocity inertial (z down), attitude as
/// roll/pitch/yaw, rates in the body frame.
struct VehicleState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s
  Eigen::Vector3d attitude = Eigen::Vector3d::Zero();  // phi, theta, psi (rad)
  Eigen::Vector3d rates = Eigen::Vector3d::Zero();     // p, q, r (rad/s)

  bool finite() const;
};

/// Force and moment on the airframe, body frame.
struct BodyWrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();  // N*m
};

struct StateDerivative {
  Eigen::Vector3d position_dot, velocity_dot, attitude_dot, rates_dot;
};

/// Componentwise sum of the four nozzle forces.
Eigen::Vector3d aggregate_force(const std::array<Eigen::Vector3d, 4>& forces);

/// Equivalent-moment aggregation: every nozzle's thrust is taken to act at
/// the fixed point a = 0.5135*s below its mount, which makes the moment
/// linear in the nozzle forces. Compare against the exact per-nozzle
/// cross-product model for the approximation error.
Eigen::Vector3d aggregate_moment_linearized(const std::array<Eigen::Vector3d, 4>& forces,
                                            const VehicleParams& params);

/// Exact moment aggregation at the true bent-tip application points.
Eigen::Vector3d aggregate_moment_exact(const std::array<Eigen::Vector3d, 4>& forces,
                                       const std::array<CurvatureConfig, 4>& configs,
                                       const VehicleParams& params);

/// Exact thrust lever a(alpha) = s * tan(alpha/2) / alpha, the distance
/// from the mount plane to the point where the vectored thrust line
/// crosses the nozzle axis. Monotone increasing, s/2 at alpha -> 0.
double equivalent_lever(double alpha, double s);

/// Rigid-body derivatives: translational dynamics in the inertial frame
/// through the force mixing matrix with gravity +g on z-dot, Euler
/// rigid-body rate dynamics with diagonal inertia, and exact Euler-angle
/// kinematics (or the small-angle identification when configured).
/// Throws SingularityError at |pitch| >= 90 deg.
StateDerivative derivatives(const VehicleState& state, const BodyWrench& wrench,
                            const VehicleParams& params);

/// Classical fixed-step RK4 advance with the wrench held constant over the
/// step. dt must lie in (0, 0.01] s.
VehicleState step(const VehicleState& state, const BodyWrench& wrench,
                  const VehicleParams& params, double dt);

}  // namespace softquad
