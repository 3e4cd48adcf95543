#include "softquad/nozzle_kinematics.hpp"

#include <cmath>
#include <string>

#include "softquad/frames.hpp"

namespace softquad {

namespace {

// Below this bend the translation switches to its series form.
constexpr double kStraightThreshold = 1e-6;

std::string cable_str(const CableLengths& m) {
  return "(" + std::to_string(m.m1) + ", " + std::to_string(m.m2) + ", " +
         std::to_string(m.m3) + ")";
}

}  // namespace

NozzleGeometry NozzleGeometry::for_index(int i, double h, double s, double arm_half_diagonal,
                                         double alpha_max, double max_cable_length) {
  if (i < 1 || i > 4) throw DomainError("nozzle index must be in 1..4, got " + std::to_string(i));
  const double c = std::sqrt(0.5) * arm_half_diagonal;
  static constexpr double sx[4] = {-1.0, 1.0, 1.0, -1.0};
  static constexpr double sy[4] = {-1.0, -1.0, 1.0, 1.0};
  NozzleGeometry g;
  g.cable_offset_radius = h;
  g.nominal_length = s;
  g.index = i;
  g.mount_xy = Eigen::Vector2d(sx[i - 1] * c, sy[i - 1] * c);
  g.azimuth_offset = deg2rad(90.0) * (i - 1);
  g.alpha_max = alpha_max;
  g.max_cable_length = max_cable_length;
  g.validate();
  return g;
}

void NozzleGeometry::validate() const {
  if (!(cable_offset_radius > 0.0)) throw DomainError("cable offset radius must be > 0");
  if (!(nominal_length > 0.0)) throw DomainError("nozzle length must be > 0");
  if (!(nominal_length <= max_cable_length))
    throw DomainError("nozzle length exceeds cable capability");
  if (!(alpha_max > 0.0)) throw DomainError("bend limit must be > 0");
}

CurvatureConfig drive_to_config(const CableLengths& m, const NozzleGeometry& geom) {
  for (double mk : {m.m1, m.m2, m.m3}) {
    if (!(mk > 0.0)) throw DomainError("cable length must be > 0, got cables " + cable_str(m));
    if (mk > geom.max_cable_length)
      throw DomainError("cable length exceeds capability, got cables " + cable_str(m));
  }

  const double d12 = m.m1 - m.m2, d13 = m.m1 - m.m3, d23 = m.m2 - m.m3;
  // m1^2+m2^2+m3^2 - m1m2 - m1m3 - m2m3, written as a sum of squared
  // differences so near-equal cables do not cancel catastrophically.
  const double quad = 0.5 * (d12 * d12 + d13 * d13 + d23 * d23);
  const double mean = (m.m1 + m.m2 + m.m3) / 3.0;

  CurvatureConfig kappa;
  kappa.arc_length = mean;
  if (quad == 0.0) {
    kappa.bend_angle = 0.0;
    kappa.bend_azimuth = 0.0;  // canonical straight configuration
    return kappa;
  }

  kappa.bend_angle = 2.0 * std::sqrt(quad) / (3.0 * geom.cable_offset_radius);
  if (kappa.bend_angle > geom.alpha_max)
    throw RealizabilityError("cables " + cable_str(m) + " imply bend " +
                             std::to_string(rad2deg(kappa.bend_angle)) + " deg beyond limit " +
                             std::to_string(rad2deg(geom.alpha_max)) + " deg");

  // Four-quadrant azimuth. Numerator and denominator are both proportional
  // to 3*alpha*h times sine/cosine of the cable-frame azimuth, so atan2
  // recovers it on the full circle, including the boundary cases the
  // three-branch piecewise form leaves open.
  const double num = m.m2 + m.m3 - 2.0 * m.m1;
  const double den = std::sqrt(3.0) * (m.m2 - m.m3);
  kappa.bend_azimuth = wrap_angle_2pi(std::atan2(num, den) + geom.azimuth_offset);
  return kappa;
}

CableLengths config_to_drive(const CurvatureConfig& kappa, const NozzleGeometry& geom) {
  if (kappa.bend_angle < 0.0) throw DomainError("bend angle must be >= 0");
  if (!(kappa.arc_length > 0.0)) throw DomainError("arc length must be > 0");

  CableLengths m;
  if (kappa.bend_angle == 0.0) {
    m.m1 = m.m2 = m.m3 = kappa.arc_length;  // limit alpha*r -> L
  } else {
    const double beta_c = kappa.bend_azimuth - geom.azimuth_offset;
    const double ar = kappa.arc_length;  // alpha * r
    const double ah = kappa.bend_angle * geom.cable_offset_radius;
    m.m1 = ar - ah * std::sin(beta_c);
    m.m2 = ar - ah * std::sin(beta_c - 2.0 * kPi / 3.0);
    m.m3 = ar - ah * std::sin(beta_c + 2.0 * kPi / 3.0);
  }
  for (double mk : {m.m1, m.m2, m.m3}) {
    if (!(mk > 0.0) || mk > geom.max_cable_length)
      throw DomainError("configuration over-bends beyond cable capability: cables " +
                        cable_str(m));
  }
  return m;
}

TipPose config_to_pose(const CurvatureConfig& kappa) {
  const double alpha = kappa.bend_angle;
  const double beta = kappa.bend_azimuth;
  const double len = kappa.arc_length;
  const double sb = std::sin(beta), cb = std::cos(beta);

  TipPose pose;
  if (alpha < kStraightThreshold) {
    // Series limit of the arc translation; the quadratic axial term keeps
    // the error below round-off at the switch point.
    pose.translation = Eigen::Vector3d(0.5 * len * alpha * cb, 0.5 * len * alpha * sb,
                                       len * (1.0 - alpha * alpha / 6.0));
    if (alpha == 0.0) return pose;  // rotation exactly identity
  } else {
    const double r = len / alpha;
    // 1 - cos(alpha) via the half-angle square avoids cancellation at
    // small bends.
    const double half = std::sin(0.5 * alpha);
    const double versine = 2.0 * half * half;
    pose.translation = Eigen::Vector3d(r * cb * versine, r * sb * versine, r * std::sin(alpha));
  }

  const double sa = std::sin(alpha), ca = std::cos(alpha);
  Eigen::Matrix3d q;
  q << cb * cb * ca + sb * sb, cb * sb * (ca - 1.0),    cb * sa,
       cb * sb * (ca - 1.0),   sb * sb * ca + cb * cb,  sb * sa,
       -cb * sa,               -sb * sa,                ca;
  pose.rotation = q;
  return pose;
}

Eigen::Vector3d nozzle_thrust(const CurvatureConfig& kappa, double omega, double thrust_coeff) {
  if (omega < 0.0) throw DomainError("rotor speed must be >= 0");
  const double thrust = thrust_coeff * omega * omega;
  const double sa = std::sin(kappa.bend_angle), ca = std::cos(kappa.bend_angle);
  return {thrust * std::cos(kappa.bend_azimuth) * sa,
          thrust * std::sin(kappa.bend_azimuth) * sa, thrust * ca};
}

Eigen::Vector3d nozzle_tip_body(const NozzleGeometry& geom, const CurvatureConfig& kappa) {
  const Eigen::Vector3d tip = config_to_pose(kappa).translation;
  return {geom.mount_xy.x() + tip.x(), geom.mount_xy.y() + tip.y(), tip.z()};
}

Eigen::Vector3d nozzle_moment_exact(const Eigen::Vector3d& force, const NozzleGeometry& geom,
                                    const CurvatureConfig& kappa) {
  return nozzle_tip_body(geom, kappa).cross(force);
}

}  // namespace softquad
