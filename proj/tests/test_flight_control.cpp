#include <doctest.h>

#include <cmath>
#include <random>

#include "softquad/config.hpp"
#include "softquad/flight_control.hpp"
#include "support/oracles.hpp"

using namespace softquad;

namespace {
const VehicleParams kParams;
const GainSet kGains = default_config().gains;

Setpoint6D hover_setpoint() {
  Setpoint6D sp;
  sp.position = {0.0, 0.0, 1.0};
  return sp;
}

VehicleState hover_state() {
  VehicleState s;
  s.position = {0.0, 0.0, 1.0};
  return s;
}
}  // namespace

TEST_CASE("pid axis: proportional, integral accumulation, clamps") {
  PidAxis pid;
  CHECK(pid.step({2.0, 0.0, 0.0}, 0.0, 0.0, 0.01, 1.0, 10.0) == 0.0);
  CHECK(pid.step({2.0, 0.0, 0.0}, 0.5, 0.0, 0.01, 1.0, 10.0) == 1.0);
  CHECK_THROWS_AS(pid.step({1.0, 0.0, 0.0}, 0.1, 0.0, 0.0, 1.0, 10.0), DomainError);

  // Constant error integrates to ki * e * T, then holds at the clamp.
  PidAxis integ;
  const PidGains g{0.0, 0.5, 0.0};
  const double e = 0.2, dt = 0.01;
  double u = 0.0;
  for (int k = 0; k < 200; ++k) u = integ.step(g, e, 0.0, dt, 1.0, 10.0);
  CHECK(u == doctest::Approx(0.5 * e * 2.0).epsilon(1e-12));
  for (int k = 0; k < 20000; ++k) u = integ.step(g, e, 0.0, dt, 1.0, 10.0);
  CHECK(u == 1.0);  // integrator clamp

  // Output saturation.
  PidAxis sat;
  CHECK(sat.step({100.0, 0.0, 0.0}, 1.0, 0.0, 0.01, 1.0, 5.0) == 5.0);
}

TEST_CASE("allocation matrix structure and invariants") {
  const AllocationMatrix alloc = build_allocation(kParams);
  const double a = kEquivalentLeverRatio * kParams.nozzle_length;
  const double c = kParams.planar_arm();

  const Eigen::FullPivLU<Eigen::Matrix<double, 6, 12>> lu(alloc.matrix);
  CHECK(lu.rank() == 6);
  CHECK((alloc.matrix * alloc.pseudo_inverse - Eigen::Matrix<double, 6, 6>::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  // Force rows carry the per-axis summation pattern.
  for (int i = 0; i < 4; ++i) {
    CHECK(alloc.matrix(0, 3 * i) == 1.0);
    CHECK(alloc.matrix(1, 3 * i + 1) == 1.0);
    CHECK(alloc.matrix(2, 3 * i + 2) == 1.0);
  }
  // Moment rows, nozzle by nozzle: columns (x, y, z) contribute
  // (0, -a, +-c) to M_x, (a, 0, -+c) to M_y, (+-c, +-c, 0) to M_z.
  const double mx_z[4] = {-c, -c, c, c};
  const double my_z[4] = {c, -c, -c, c};
  const double mz_x[4] = {c, c, -c, -c};
  const double mz_y[4] = {-c, c, c, -c};
  for (int i = 0; i < 4; ++i) {
    CHECK(alloc.matrix(3, 3 * i + 1) == doctest::Approx(-a).epsilon(1e-15));
    CHECK(alloc.matrix(3, 3 * i + 2) == doctest::Approx(mx_z[i]).epsilon(1e-15));
    CHECK(alloc.matrix(4, 3 * i) == doctest::Approx(a).epsilon(1e-15));
    CHECK(alloc.matrix(4, 3 * i + 2) == doctest::Approx(my_z[i]).epsilon(1e-15));
    CHECK(alloc.matrix(5, 3 * i) == doctest::Approx(mz_x[i]).epsilon(1e-15));
    CHECK(alloc.matrix(5, 3 * i + 1) == doctest::Approx(mz_y[i]).epsilon(1e-15));
  }

  VehicleParams degenerate = kParams;
  degenerate.arm_half_diagonal = 1e-12;
  CHECK_THROWS_AS(build_allocation(degenerate), Error);
}

TEST_CASE("allocation distributes weight evenly and reconstructs wrenches") {
  const AllocationMatrix alloc = build_allocation(kParams);

  BodyWrench hover;
  hover.force = {0.0, 0.0, 11.76};
  const Eigen::Matrix<double, 12, 1> x = allocate(hover, alloc);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(x(3 * i)) < 1e-12);
    CHECK(std::abs(x(3 * i + 1)) < 1e-12);
    CHECK(x(3 * i + 2) == doctest::Approx(11.76 / 4.0).epsilon(1e-12));
  }

  CHECK(allocate(BodyWrench{}, alloc).norm() == 0.0);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 500; ++n) {
    BodyWrench w;
    w.force = {u(rng), u(rng), 10.0 + u(rng)};
    w.moment = {0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)};
    const Eigen::Matrix<double, 12, 1> xx = allocate(w, alloc);
    Eigen::Matrix<double, 6, 1> wv;
    wv << w.force, w.moment;
    REQUIRE((alloc.matrix * xx - wv).norm() <= 1e-9 * wv.norm());

    // Minimal norm against the SVD oracle.
    const Eigen::VectorXd x_oracle =
        oracles::least_norm_svd(Eigen::MatrixXd(alloc.matrix), Eigen::VectorXd(wv));
    REQUIRE(xx.norm() <= x_oracle.norm() * (1.0 + 1e-9));

    // And against any particular solution.
    Eigen::Matrix<double, 12, 1> x0;
    for (int i = 0; i < 12; ++i) x0(i) = u(rng);
    const Eigen::Matrix<double, 6, 1> w0 = alloc.matrix * x0;
    BodyWrench bw;
    bw.force = w0.head<3>();
    bw.moment = w0.tail<3>();
    REQUIRE(allocate(bw, alloc).norm() <= x0.norm() * (1.0 + 1e-9));
  }
}

TEST_CASE("soft mixer inverts nozzle forces") {
  const double ct = kParams.thrust_coeff;

  SUBCASE("axial force keeps the previous azimuth") {
    const NozzleCommand cmd = soft_mixer({0.0, 0.0, 3.0}, kParams, 1.25);
    CHECK(cmd.alpha == 0.0);
    CHECK(cmd.beta == 1.25);
    CHECK(cmd.omega == doctest::Approx(std::sqrt(3.0 / ct)).epsilon(1e-14));
    CHECK_FALSE(cmd.alpha_clamped);
    CHECK_FALSE(cmd.omega_clamped);
  }

  SUBCASE("diagonal force bends 45 degrees at azimuth 45") {
    const double k = 1.7;
    const NozzleCommand cmd = soft_mixer({k, k, k * std::sqrt(2.0)}, kParams, 0.0);
    CHECK(cmd.alpha == doctest::Approx(deg2rad(45.0)).epsilon(1e-12));
    CHECK(cmd.beta == doctest::Approx(deg2rad(45.0)).epsilon(1e-12));
  }

  SUBCASE("non-positive axial component is infeasible") {
    CHECK_THROWS_AS(soft_mixer({1.0, 0.0, 0.0}, kParams, 0.0), InfeasibleError);
    CHECK_THROWS_AS(soft_mixer({1.0, 0.0, -2.0}, kParams, 0.0), InfeasibleError);
  }

  SUBCASE("clamps are reported") {
    const NozzleCommand bent = soft_mixer({9.0, 0.0, 1.0}, kParams, 0.0);
    CHECK(bent.alpha == kParams.alpha_max);
    CHECK(bent.alpha_clamped);
    const NozzleCommand fast = soft_mixer({0.0, 0.0, 50.0}, kParams, 0.0);
    CHECK(fast.omega == kParams.omega_max);
    CHECK(fast.omega_clamped);
  }

  SUBCASE("random feasible forces round-trip through the thrust model") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 2000; ++n) {
      const Eigen::Vector3d f(u(rng), u(rng), 2.5 + 1.5 * u(rng));
      if (std::hypot(f.x(), f.y()) > f.z() * std::tan(kParams.alpha_max)) continue;
      const NozzleCommand cmd = soft_mixer(f, kParams, 0.0);
      REQUIRE_FALSE(cmd.alpha_clamped);
      REQUIRE_FALSE(cmd.omega_clamped);
      const Eigen::Vector3d back =
          nozzle_thrust({cmd.alpha, cmd.beta, kParams.nozzle_length}, cmd.omega, ct);
      REQUIRE((back - f).norm() <= 1e-9 * f.norm());
    }
  }
}

TEST_CASE("command cables pass through the drive mapping") {
  const NozzleCommand cmd{deg2rad(20.0), deg2rad(45.0), 1500.0, false, false};
  const CableLengths m = command_cables(cmd, kParams.nozzle(1), 0.12);
  const CurvatureConfig back = drive_to_config(m, kParams.nozzle(1));
  CHECK(back.bend_angle == doctest::Approx(cmd.alpha).epsilon(1e-12));
  CHECK(back.bend_azimuth == doctest::Approx(cmd.beta).epsilon(1e-12));
}

TEST_CASE("locked-configuration map: singularities and solves") {
  SUBCASE("all-straight lock has an exactly zero yaw row") {
    const Eigen::Matrix4d e = underactuated_matrix(LockedAngles::straight(), kParams);
    CHECK(e.row(3).cwiseAbs().maxCoeff() == 0.0);
    CHECK(underactuated_determinant(e) == 0.0);
    CHECK_THROWS_AS(underactuated_mixer(11.76, Eigen::Vector3d::Zero(),
                                        LockedAngles::straight(), kParams),
                    SingularConfigError);
  }

  SUBCASE("four-fold radial bends are also yaw-singular") {
    // Bending every nozzle straight at the body center puts each lateral
    // force line through the center column: no yaw authority either.
    const Eigen::Matrix4d e =
        underactuated_matrix(LockedAngles::radial_inward(deg2rad(20.0)), kParams);
    CHECK(std::abs(underactuated_determinant(e)) < 1e-12);
  }

  SUBCASE("pinch and tangential locks are solvable") {
    for (double deg : {5.0, 10.0, 20.0, 30.0, 45.0}) {
      for (const LockedAngles& lock :
           {LockedAngles::pinch(deg2rad(deg)), LockedAngles::pinch_open(deg2rad(deg)),
            LockedAngles::tangential(deg2rad(deg))}) {
        const Eigen::Matrix4d e = underactuated_matrix(lock, kParams);
        double scale = 1.0;
        for (int r = 0; r < 4; ++r) scale *= e.row(r).norm();
        REQUIRE(std::abs(underactuated_determinant(e)) > 1e-6 * scale);
      }
    }
  }

  SUBCASE("symmetric hover demand yields equal rotor speeds") {
    const double fz = kParams.mass * kParams.gravity;
    const UnderactuatedSolution sol = underactuated_mixer(
        fz, Eigen::Vector3d::Zero(), LockedAngles::pinch(deg2rad(20.0)), kParams);
    for (int i = 1; i < 4; ++i) {
      CHECK(sol.omega[i] == doctest::Approx(sol.omega[0]).epsilon(1e-12));
    }
    const double expected_t = fz / (4.0 * std::cos(deg2rad(20.0)));
    CHECK(sol.thrust[0] == doctest::Approx(expected_t).epsilon(1e-12));
  }

  SUBCASE("random demands reconstruct through the map") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 500; ++n) {
      const LockedAngles lock = LockedAngles::pinch(deg2rad(10.0 + 30.0 * (u(rng) + 1.0) / 2.0));
      const double fz = 11.0 + 2.0 * u(rng);
      const Eigen::Vector3d md(0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng));
      const UnderactuatedSolution sol = underactuated_mixer(fz, md, lock, kParams);
      const Eigen::Matrix4d e = underactuated_matrix(lock, kParams);
      Eigen::Vector4d t;
      for (int i = 0; i < 4; ++i) t(i) = sol.thrust[i];
      Eigen::Vector4d demand;
      demand << fz, md;
      REQUIRE((e * t - demand).norm() <= 1e-9 * demand.norm());
    }
  }

  SUBCASE("negative thrust demands are infeasible") {
    CHECK_THROWS_AS(underactuated_mixer(-5.0, Eigen::Vector3d::Zero(),
                                        LockedAngles::pinch(deg2rad(20.0)), kParams),
                    InfeasibleError);
  }
}

TEST_CASE("grasp planning") {
  SUBCASE("pipe contact solves within the bend range") {
    GraspTarget pipe;  // tube of radius 0.05 m, axis 0.11 m below the mounts
    const GraspPlan plan = grasp_plan(pipe, kParams);
    CHECK(plan.contact_alpha > 0.0);
    CHECK(plan.contact_alpha <= kParams.alpha_max);
    CHECK(plan.contact_residual < 1e-6);
    // Verify against forward kinematics, independently of the solve.
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector3d tip = nozzle_tip_body(
          kParams.nozzle(i + 1), {plan.converge.angles.alpha[i], plan.converge.angles.beta[i],
                                  plan.converge.arc_length});
      REQUIRE(std::abs(grasp_envelope_distance(pipe, tip)) < 1e-6);
    }
    // Jaws open away from the target before the grasp.
    for (int i = 0; i < 4; ++i) {
      CHECK(plan.prebend.angles.alpha[i] > 0.0);
      CHECK(std::abs(oracles::angle_diff(plan.prebend.angles.beta[i],
                                         plan.converge.angles.beta[i] + kPi)) < 1e-12);
    }
  }

  SUBCASE("degenerate sphere envelope touches at zero bend") {
    GraspTarget sphere;
    sphere.type = GraspTarget::Type::kSphere;
    sphere.depth = 0.0;
    sphere.radius =
        nozzle_tip_body(kParams.nozzle(1), {0.0, 0.0, sphere.arc_length}).norm();
    const GraspPlan plan = grasp_plan(sphere, kParams);
    CHECK(plan.contact_alpha == 0.0);
    CHECK(plan.contact_residual < 1e-12);
  }

  SUBCASE("unreachable radius raises") {
    GraspTarget far;
    far.radius = 0.5;
    CHECK_THROWS_AS(grasp_plan(far, kParams), UnreachableError);
  }

  SUBCASE("pole grasp bends radially inward") {
    GraspTarget pole;
    pole.type = GraspTarget::Type::kPole;
    pole.radius = 0.07;
    const GraspPlan plan = grasp_plan(pole, kParams);
    CHECK(plan.contact_residual < 1e-6);
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector2d mount = kParams.nozzle(i + 1).mount_xy;
      const double inward = wrap_angle_2pi(std::atan2(-mount.y(), -mount.x()));
      CHECK(std::abs(oracles::angle_diff(plan.converge.angles.beta[i], inward)) < 1e-12);
    }
  }
}

TEST_CASE("controller hover equilibrium produces the feedforward wrench") {
  Controller ctrl(kParams, kGains, {}, 1e-3);
  const ControllerOutput out = ctrl.tick(hover_state(), hover_setpoint());
  const double mg = kParams.mass * kParams.gravity;
  CHECK(std::abs(out.demand.force.x()) < 1e-12);
  CHECK(std::abs(out.demand.force.y()) < 1e-12);
  CHECK(out.demand.force.z() == doctest::Approx(mg).epsilon(1e-12));
  CHECK(out.demand.moment.norm() < 1e-12);
  for (const NozzleCommand& cmd : out.commands) {
    CHECK(cmd.alpha == 0.0);
    CHECK(cmd.omega == doctest::Approx(kParams.hover_rotor_speed()).epsilon(1e-9));
  }
  CHECK(out.clamp_flags == 0);
}

TEST_CASE("pure altitude error demands a purely axial force at level attitude") {
  Controller ctrl(kParams, kGains, {}, 1e-3);
  VehicleState s = hover_state();
  s.position.z() += 0.2;  // below the setpoint (z down)
  const ControllerOutput out = ctrl.tick(s, hover_setpoint());
  CHECK(std::abs(out.demand.force.x()) < 1e-12);
  CHECK(std::abs(out.demand.force.y()) < 1e-12);
  CHECK(out.demand.force.z() > kParams.mass * kParams.gravity);
  CHECK(out.demand.moment.norm() < 1e-12);
}

TEST_CASE("x setpoint step leaves the moment demand at zero") {
  Controller ctrl(kParams, kGains, {}, 1e-3);
  Setpoint6D sp = hover_setpoint();
  sp.position.x() += 0.5;
  const ControllerOutput out = ctrl.tick(hover_state(), sp);
  // The force mixing maps the inertial x demand onto the body y axis at
  // zero yaw; either way the moment stays zero (decoupled).
  CHECK(out.demand.force.head<2>().norm() > 0.0);
  CHECK(out.demand.moment.norm() < 1e-12);
}

TEST_CASE("mode switch validation and bumpless wrench transfer") {
  Controller ctrl(kParams, kGains, {}, 1e-3);

  // Settle the loops at hover for a few ticks.
  for (int k = 0; k < 20; ++k) ctrl.tick(hover_state(), hover_setpoint());

  CHECK_THROWS_AS(
      ctrl.switch_mode(ControlMode::grasp_perch(LockedAngles::straight()), hover_state(), 0.02),
      SwitchRejectedError);
  CHECK_THROWS_AS(ctrl.switch_mode(
                      ControlMode::grasp_perch(LockedAngles::radial_inward(deg2rad(20.0))),
                      hover_state(), 0.02),
                  SwitchRejectedError);

  ctrl.switch_mode(ControlMode::grasp_perch(LockedAngles::pinch(deg2rad(20.0))), hover_state(),
                   0.02);
  CHECK(ctrl.mode().is_grasp());
  for (int k = 0; k < 4; ++k) ctrl.tick(hover_state(), hover_setpoint());
  REQUIRE(ctrl.transitions().size() == 1);
  CHECK(ctrl.transitions()[0].to_grasp);
  CHECK(ctrl.transitions()[0].force_discontinuity < 1e-6);

  ctrl.switch_mode(ControlMode::fully_actuated(), hover_state(), 0.03);
  for (int k = 0; k < 4; ++k) ctrl.tick(hover_state(), hover_setpoint());
  REQUIRE(ctrl.transitions().size() == 2);
  CHECK_FALSE(ctrl.transitions()[1].to_grasp);
  CHECK(ctrl.transitions()[1].force_discontinuity < 1e-6);
}

TEST_CASE("grasp mode commands the locked angles and solves rotor speeds") {
  Controller ctrl(kParams, kGains, {}, 1e-3);
  for (int k = 0; k < 10; ++k) ctrl.tick(hover_state(), hover_setpoint());
  const LockedAngles lock = LockedAngles::pinch(deg2rad(20.0));
  ctrl.switch_mode(ControlMode::grasp_perch(lock), hover_state(), 0.01);
  const ControllerOutput out = ctrl.tick(hover_state(), hover_setpoint());
  for (int i = 0; i < 4; ++i) {
    CHECK(out.commands[i].alpha == lock.alpha[i]);
    CHECK(out.commands[i].beta == lock.beta[i]);
    CHECK(out.commands[i].omega > 0.0);
  }
}
