#include <doctest.h>

#include <cmath>
#include <random>

#include "softquad/nozzle_kinematics.hpp"
#include "softquad/vehicle_dynamics.hpp"
#include "support/oracles.hpp"

using namespace softquad;

namespace {
const VehicleParams kParams;
const NozzleGeometry kNozzle1 = kParams.nozzle(1);
}  // namespace

TEST_CASE("equal cables give the canonical straight configuration") {
  const CurvatureConfig kappa = drive_to_config({0.12, 0.12, 0.12}, kNozzle1);
  CHECK(kappa.bend_angle == 0.0);
  CHECK(kappa.bend_azimuth == 0.0);
  CHECK(kappa.arc_length == doctest::Approx(0.12).epsilon(1e-15));
}

TEST_CASE("bend angle matches the scalar cable quadratic") {
  // Independent evaluation: quad = sum of squares minus pairwise products,
  // alpha = 2 sqrt(quad) / (3 h).
  const double m1 = 0.11, m2 = 0.12, m3 = 0.12, h = 0.025;
  const double quad = m1 * m1 + m2 * m2 + m3 * m3 - m1 * m2 - m1 * m3 - m2 * m3;
  const double alpha_ref = 2.0 * std::sqrt(quad) / (3.0 * h);
  CHECK(quad == doctest::Approx(1e-4).epsilon(1e-9));
  CHECK(alpha_ref == doctest::Approx(0.2667).epsilon(2e-4));

  const CurvatureConfig kappa = drive_to_config({m1, m2, m3}, kNozzle1);
  CHECK(kappa.bend_angle == doctest::Approx(alpha_ref).epsilon(1e-12));
}

TEST_CASE("named roundtrip recovers a 30 degree bend") {
  const CurvatureConfig in{deg2rad(30.0), 0.0, 0.12};
  const CurvatureConfig back = drive_to_config(config_to_drive(in, kNozzle1), kNozzle1);
  CHECK(std::abs(back.bend_angle - in.bend_angle) < 1e-9);
  CHECK(std::abs(oracles::angle_diff(back.bend_azimuth, in.bend_azimuth)) < 1e-9);
  CHECK(std::abs(back.arc_length - in.arc_length) < 1e-9);
}

TEST_CASE("straight configuration maps to three equal cables") {
  const CableLengths m = config_to_drive({0.0, 1.23, 0.12}, kNozzle1);
  CHECK(m.m1 == 0.12);
  CHECK(m.m2 == 0.12);
  CHECK(m.m3 == 0.12);
}

TEST_CASE("zero cable-frame azimuth bends cable 1 alone") {
  const CurvatureConfig kappa{deg2rad(25.0), 0.0, 0.12};
  const CableLengths m = config_to_drive(kappa, kNozzle1);
  // sin(0) = 0 leaves cable 1 at the arc length; 2 and 3 stay symmetric.
  CHECK(m.m1 == doctest::Approx(0.12).epsilon(1e-15));
  CHECK(m.m2 == doctest::Approx(m.m3).epsilon(1e-15));
}

TEST_CASE("cable-frame offset shifts the body azimuth per slot") {
  const CurvatureConfig kappa{deg2rad(20.0), deg2rad(130.0), 0.12};
  const CableLengths ref = config_to_drive(kappa, kNozzle1);
  for (int i = 2; i <= 4; ++i) {
    const NozzleGeometry geom = kParams.nozzle(i);
    const CurvatureConfig shifted{kappa.bend_angle,
                                  wrap_angle_2pi(kappa.bend_azimuth + geom.azimuth_offset),
                                  kappa.arc_length};
    const CableLengths m = config_to_drive(shifted, geom);
    CHECK(m.m1 == doctest::Approx(ref.m1).epsilon(1e-14));
    CHECK(m.m2 == doctest::Approx(ref.m2).epsilon(1e-14));
    CHECK(m.m3 == doctest::Approx(ref.m3).epsilon(1e-14));
  }
}

TEST_CASE("random roundtrips hold to 1e-9 on both paths") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 2000; ++n) {
    const int slot = 1 + int(n % 4);
    const NozzleGeometry geom = kParams.nozzle(slot);
    const CurvatureConfig in = oracles::random_config(rng, geom);

    const CableLengths m = config_to_drive(in, geom);
    const CurvatureConfig back = drive_to_config(m, geom);
    REQUIRE(std::abs(back.bend_angle - in.bend_angle) < 1e-9);
    REQUIRE(std::abs(oracles::angle_diff(back.bend_azimuth, in.bend_azimuth)) < 1e-9);
    REQUIRE(std::abs(back.arc_length - in.arc_length) < 1e-9);

    // Arc-length identity: alpha * r equals the cable mean.
    const double mean = (m.m1 + m.m2 + m.m3) / 3.0;
    REQUIRE(std::abs(in.bend_angle * in.radius() - mean) < 1e-12);

    const CableLengths m2 = config_to_drive(back, geom);
    REQUIRE(std::abs(m2.m1 - m.m1) < 1e-9);
    REQUIRE(std::abs(m2.m2 - m.m2) < 1e-9);
    REQUIRE(std::abs(m2.m3 - m.m3) < 1e-9);
  }
}

TEST_CASE("cable domain errors") {
  CHECK_THROWS_AS(drive_to_config({0.0, 0.12, 0.12}, kNozzle1), DomainError);
  CHECK_THROWS_AS(drive_to_config({-0.01, 0.12, 0.12}, kNozzle1), DomainError);
  CHECK_THROWS_AS(drive_to_config({0.2, 0.12, 0.12}, kNozzle1), DomainError);
  // (0.10, 0.14, 0.14) implies a bend beyond 45 deg.
  CHECK_THROWS_AS(drive_to_config({0.10, 0.14, 0.14}, kNozzle1), RealizabilityError);
  // Over-bend at long extension runs a cable past the capability bound.
  CHECK_THROWS_AS(config_to_drive({deg2rad(45.0), deg2rad(270.0), 0.149}, kNozzle1),
                  DomainError);
  CHECK_THROWS_AS(config_to_drive({-0.1, 0.0, 0.12}, kNozzle1), DomainError);
}

TEST_CASE("straight pose is exact and a quarter bend matches substitution") {
  const TipPose straight = config_to_pose({0.0, 2.0, 0.1});
  CHECK(straight.rotation.isIdentity(0.0));
  CHECK(straight.translation.x() == 0.0);
  CHECK(straight.translation.y() == 0.0);
  CHECK(straight.translation.z() == 0.1);

  // alpha = pi/2, beta = 0: tip at (r, 0, r).
  const double len = 0.12, r = len / (0.5 * kPi);
  const TipPose quarter = config_to_pose({0.5 * kPi, 0.0, len});
  CHECK(quarter.translation.x() == doctest::Approx(r).epsilon(1e-14));
  CHECK(quarter.translation.y() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(quarter.translation.z() == doctest::Approx(r).epsilon(1e-14));
}

TEST_CASE("pose matches the five-elementary-transform composition") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 2000; ++n) {
    const CurvatureConfig kappa = oracles::random_config(rng, kNozzle1, 1e-6);
    const Eigen::Matrix4d ref = oracles::five_transform_pose(kappa);
    const TipPose pose = config_to_pose(kappa);
    REQUIRE((pose.rotation - ref.block<3, 3>(0, 0)).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((pose.translation - ref.block<3, 1>(0, 3)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("tip rotation stays orthonormal with unit determinant") {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 2000; ++n) {
    const CurvatureConfig kappa = oracles::random_config(rng, kNozzle1, 0.0);
    const Eigen::Matrix3d q = config_to_pose(kappa).rotation;
    REQUIRE((q.transpose() * q - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(std::abs(q.determinant() - 1.0) < 1e-10);
  }
}

TEST_CASE("pose is continuous through the straight singularity") {
  const double len = 0.12;
  const TipPose at_zero = config_to_pose({0.0, 0.7, len});
  for (double eps : {1e-5, 1e-7}) {
    const TipPose near_zero = config_to_pose({eps, 0.7, len});
    CHECK((near_zero.translation - at_zero.translation).norm() < 1e-4 * len);
    CHECK((near_zero.rotation - at_zero.rotation).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("thrust direction follows the bend and keeps its magnitude") {
  const double ct = 1e-6, omega = 1500.0;
  const double thrust = ct * omega * omega;

  const Eigen::Vector3d axial = nozzle_thrust({0.0, 1.0, 0.12}, omega, ct);
  CHECK(axial.x() == 0.0);
  CHECK(axial.y() == 0.0);
  CHECK(axial.z() == doctest::Approx(thrust).epsilon(1e-15));

  const Eigen::Vector3d vectored = nozzle_thrust({0.5 * kPi, 0.0, 0.12}, omega, ct);
  CHECK(vectored.x() == doctest::Approx(thrust).epsilon(1e-12));
  CHECK(std::abs(vectored.z()) < 1e-15 * thrust);

  std::mt19937_64 rng(17);
  for (int n = 0; n < 500; ++n) {
    const CurvatureConfig kappa = oracles::random_config(rng, kNozzle1, 0.0);
    REQUIRE(nozzle_thrust(kappa, omega, ct).norm() ==
            doctest::Approx(thrust).epsilon(1e-13));
  }
}

TEST_CASE("azimuth rotation rotates tip and thrust laterals together") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int n = 0; n < 200; ++n) {
    const CurvatureConfig kappa = oracles::random_config(rng, kNozzle1);
    const double delta = u(rng);
    const CurvatureConfig rotated{kappa.bend_angle, wrap_angle_2pi(kappa.bend_azimuth + delta),
                                  kappa.arc_length};
    const Eigen::Rotation2Dd rot(delta);

    const Eigen::Vector3d p0 = config_to_pose(kappa).translation;
    const Eigen::Vector3d p1 = config_to_pose(rotated).translation;
    REQUIRE((rot * p0.head<2>() - p1.head<2>()).norm() < 1e-12);
    REQUIRE(p0.z() == doctest::Approx(p1.z()).epsilon(1e-14));

    const Eigen::Vector3d f0 = nozzle_thrust(kappa, 1000.0, 1e-6);
    const Eigen::Vector3d f1 = nozzle_thrust(rotated, 1000.0, 1e-6);
    REQUIRE((rot * f0.head<2>() - f1.head<2>()).norm() < 1e-12);
  }
}

TEST_CASE("exact moment of a straight nozzle is plain cross-product arithmetic") {
  const double thrust = 3.0;
  const Eigen::Vector3d force(0.0, 0.0, thrust);
  const double c = kParams.planar_arm();

  const Eigen::Vector3d m1 = nozzle_moment_exact(force, kNozzle1, {0.0, 0.0, 0.12});
  CHECK(m1.x() == doctest::Approx(-c * thrust).epsilon(1e-14));
  CHECK(m1.y() == doctest::Approx(c * thrust).epsilon(1e-14));
  CHECK(m1.z() == 0.0);

  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  for (int i = 1; i <= 4; ++i) {
    total += nozzle_moment_exact(force, kParams.nozzle(i), {0.0, 0.0, 0.12});
  }
  CHECK(total.norm() < 1e-15);
}
