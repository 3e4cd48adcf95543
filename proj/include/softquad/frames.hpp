#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace softquad {

// Frame conventions used throughout the project. This is the single place
// where the sign conventions live; everything else derives from here.
//
//   * Inertial frame: NED-style, z positive DOWN. Gravity acts as +g on
//     the z acceleration. "Altitude 1 m" therefore corresponds to z = -1
//     when a ground plane at z = 0 is imagined; the simulator itself has
//     no ground and treats z as a plain coordinate.
//   * Body frame: x forward, y right, z down. The nozzles hang below the
//     airframe and extend in body +z; positive axial thrust has a
//     positive body-z component and lifts the craft through the minus
//     sign in the translational mixing below.
//   * Euler angles: roll phi, pitch theta, yaw psi. Body rates p, q, r.
//
// The translational dynamics mix the body-frame force into inertial
// accelerations through `body_to_inertial_force_mixing`, a proper
// rotation (orthonormal, det +1). The controller must use the transpose
// of the same matrix when mapping desired inertial forces to the body
// frame, or the closed loop is inconsistent.

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wrap an angle to [0, 2*pi).
inline double wrap_angle_2pi(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

/// Wrap an angle to [-pi, pi).
inline double wrap_angle_pi(double a) {
  double w = std::fmod(a + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w - kPi;
}

/// Coefficient matrix mapping a body-frame force to inertial accelerations
/// (times mass): accel = (1/m) * R * F + (0, 0, g).
///
/// Row by row this is the trigonometric mixing of the translational
/// dynamics; it is orthonormal with determinant +1, so its transpose maps
/// desired inertial forces back to the body frame.
inline Eigen::Matrix3d body_to_inertial_force_mixing(const Eigen::Vector3d& attitude) {
  const double sp = std::sin(attitude.x()), cp = std::cos(attitude.x());  // roll
  const double st = std::sin(attitude.y()), ct = std::cos(attitude.y());  // pitch
  const double ss = std::sin(attitude.z()), cs = std::cos(attitude.z());  // yaw
  Eigen::Matrix3d r;
  r << ct * ss, ss * st * sp + cp * cs, ss * st * cp - sp * cs,
       ct * cs, cs * st * sp - cp * ss, cs * st * cp + sp * ss,
       st,      -sp * ct,               -cp * ct;
  return r;
}

/// Matrix mapping body rates (p, q, r) to Euler-angle rates
/// (phi_dot, theta_dot, psi_dot). Singular at |theta| = 90 deg.
inline Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& attitude) {
  const double sp = std::sin(attitude.x()), cp = std::cos(attitude.x());
  const double tt = std::tan(attitude.y()), ct = std::cos(attitude.y());
  Eigen::Matrix3d e;
  e << 1.0, sp * tt, cp * tt,
       0.0, cp,      -sp,
       0.0, sp / ct, cp / ct;
  return e;
}

}  // namespace softquad
