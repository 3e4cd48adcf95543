#pragma once

#include <Eigen/Dense>

#include "softquad/errors.hpp"

namespace softquad {

// Kinematics of one cable-driven thrust-vectoring nozzle under the
// piecewise-constant-curvature assumptions: the nozzle axis bends as a
// smooth circular arc, with no torsion and no radial deformation. Three
// spaces are linked here:
//
//   drive space          cable lengths (m1, m2, m3)
//   configuration space  arc parameters (bend angle, bend azimuth, arc length)
//   task space           tip pose in the nozzle base frame
//
// plus the thrust and moment each nozzle contributes to the airframe.
// All functions are pure; safe to call from any number of threads.

/// Static geometry of one nozzle and its mounting on the airframe.
struct NozzleGeometry {
  double cable_offset_radius = 0.025;  // h, m: cable attachment circle radius
  double nominal_length = 0.12;        // s, m: unbent axial length
  int index = 1;                       // 1..4, airframe position
  Eigen::Vector2d mount_xy{-0.0707106781186548, -0.0707106781186548};  // d_i, m
  double azimuth_offset = 0.0;  // rad: rotation of this nozzle's cable frame
  double alpha_max = 0.7853981633974483;  // rad: bend limit (45 deg)
  double max_cable_length = 0.15;         // m: cable/extension capability

  /// Geometry for airframe slot i in {1,2,3,4}: mounts at (-c,-c), (c,-c),
  /// (c,c), (-c,c) with c = (sqrt(2)/2)*l, cable frames rotated by
  /// (i-1)*90 deg.
  static NozzleGeometry for_index(int i, double h, double s, double arm_half_diagonal,
                                  double alpha_max, double max_cable_length);

  void validate() const;
};

/// Arc parameters of a bent nozzle. Stored as (alpha, beta, L) so the
/// straight configuration alpha = 0 is a regular point; the curvature
/// radius is computed on demand and never stored.
struct CurvatureConfig {
  double bend_angle = 0.0;    // alpha, rad, >= 0
  double bend_azimuth = 0.0;  // beta, rad, [0, 2*pi), body-frame datum
  double arc_length = 0.12;   // L, m

  double curvature() const { return bend_angle / arc_length; }
  /// Radius of curvature; only meaningful for bend_angle > 0.
  double radius() const { return arc_length / bend_angle; }
};

/// Lengths of the three drive cables of one nozzle.
struct CableLengths {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
};

/// Tip pose in the nozzle base frame: rotation of the tip plane and the
/// position of the tip-circle center.
struct TipPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();   // Q
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();    // P, m
};

/// Force and moment one nozzle applies to the airframe, body frame.
struct NozzleForceMoment {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();  // N*m
  bool at_exact_tip = true;  // false when taken about the equivalent point
};

/// Drive space -> configuration space.
///
/// The bend angle comes from the pairwise-difference form of the cable
/// quadratic (numerically exact for near-equal cables), the arc length is
/// the cable mean, and the bend azimuth is a single four-quadrant
/// arctangent shifted by the nozzle's cable-frame offset. Equal cables map
/// to the canonical straight configuration (0, 0, m1).
///
/// Throws DomainError for non-positive or over-length cables and
/// RealizabilityError when the implied bend exceeds the nozzle limit.
CurvatureConfig drive_to_config(const CableLengths& m, const NozzleGeometry& geom);

/// Configuration space -> drive space, the inverse of drive_to_config.
/// The straight case returns three equal cables of the arc length.
/// Throws DomainError when any resulting cable is non-positive or beyond
/// the nozzle's cable capability (over-bend).
CableLengths config_to_drive(const CurvatureConfig& kappa, const NozzleGeometry& geom);

/// Configuration space -> task space. Below a 1e-6 rad bend the
/// closed-form translation degenerates (radius -> infinity) and a
/// second-order series is used instead; the rotation is regular
/// everywhere.
TipPose config_to_pose(const CurvatureConfig& kappa);

/// Thrust vector of one nozzle in the body frame: axial thrust
/// T = c_t * omega^2 rotated through the tip direction. |F| == T.
Eigen::Vector3d nozzle_thrust(const CurvatureConfig& kappa, double omega, double thrust_coeff);

/// Moment of a nozzle force about the airframe center using the exact
/// thrust application point (mount offset plus bent tip position). This is
/// the reference model the linearized equivalent-moment model is checked
/// against.
Eigen::Vector3d nozzle_moment_exact(const Eigen::Vector3d& force, const NozzleGeometry& geom,
                                    const CurvatureConfig& kappa);

/// Exact tip position in the body frame (mount offset plus tip translation).
Eigen::Vector3d nozzle_tip_body(const NozzleGeometry& geom, const CurvatureConfig& kappa);

}  // namespace softquad
