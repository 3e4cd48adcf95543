#include "softquad/flight_control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace softquad {

namespace {

constexpr double kDetTolerance = 1e-9;  // relative to the Hadamard scale

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

void GainSet::validate() const {
  for (const LoopGains* loop : {&position, &velocity, &attitude, &rate}) {
    for (const PidGains& g : loop->axis) {
      if (g.kp < 0.0 || g.ki < 0.0 || g.kd < 0.0) throw DomainError("PID gains must be >= 0");
    }
    if (!(loop->integrator_limit > 0.0)) throw DomainError("integrator limit must be > 0");
    if (!(loop->output_limit > 0.0)) throw DomainError("output limit must be > 0");
  }
}

double PidAxis::step(const PidGains& g, double error, double error_rate, double dt,
                     double integrator_limit, double output_limit) {
  if (!(dt > 0.0)) throw DomainError("PID step requires dt > 0");
  integral_ = clamp(integral_ + g.ki * error * dt, -integrator_limit, integrator_limit);
  const double u = g.kp * error + integral_ + g.kd * error_rate;
  return clamp(u, -output_limit, output_limit);
}

AllocationMatrix build_allocation(const VehicleParams& params) {
  params.validate();
  AllocationMatrix alloc;
  alloc.lever = params.equivalent_lever_fixed();
  alloc.planar_arm = params.planar_arm();
  const double a = alloc.lever;

  Eigen::Matrix<double, 6, 12>& m = alloc.matrix;
  for (int i = 0; i < 4; ++i) {
    const int col = 3 * i;
    m(0, col) = 1.0;      // F_x
    m(1, col + 1) = 1.0;  // F_y
    m(2, col + 2) = 1.0;  // F_z
    // Moment rows follow d_i x F_i with d_i = (mount_xy, a).
    const Eigen::Vector2d mount = params.nozzle(i + 1).mount_xy;
    m(3, col + 1) = -a;
    m(3, col + 2) = mount.y();
    m(4, col) = a;
    m(4, col + 2) = -mount.x();
    m(5, col) = -mount.y();
    m(5, col + 1) = mount.x();
  }

  const Eigen::Matrix<double, 6, 6> gram = m * m.transpose();
  const Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(gram);
  if (!lu.isInvertible())
    throw ConditioningError("allocation normal matrix is singular (degenerate geometry)");
  // A+ = A^T (A A^T)^-1; gram is symmetric so this is solve(gram, A)^T.
  alloc.pseudo_inverse = lu.solve(Eigen::Matrix<double, 6, 12>(m)).transpose();

  const double identity_err =
      (m * alloc.pseudo_inverse - Eigen::Matrix<double, 6, 6>::Identity()).cwiseAbs().maxCoeff();
  if (!(identity_err < 1e-10))
    throw ConditioningError("allocation pseudo-inverse failed its identity check, error " +
                            std::to_string(identity_err));
  return alloc;
}

Eigen::Matrix<double, 12, 1> allocate(const BodyWrench& desired, const AllocationMatrix& alloc) {
  Eigen::Matrix<double, 6, 1> w;
  w << desired.force, desired.moment;
  return alloc.pseudo_inverse * w;
}

NozzleCommand soft_mixer(const Eigen::Vector3d& force, const VehicleParams& params,
                         double prev_beta) {
  if (!(force.z() > 0.0))
    throw InfeasibleError("nozzle cannot pull: demanded axial force " +
                          std::to_string(force.z()) + " N");

  NozzleCommand cmd;
  const double lateral = std::hypot(force.x(), force.y());
  cmd.alpha = std::atan2(lateral, force.z());
  if (cmd.alpha > params.alpha_max) {
    cmd.alpha = params.alpha_max;
    cmd.alpha_clamped = true;
  }
  // Hold the previous azimuth when the lateral demand vanishes; the
  // arctangent is undefined there and the axial thrust is azimuth-free.
  cmd.beta = (lateral == 0.0) ? prev_beta : wrap_angle_2pi(std::atan2(force.y(), force.x()));

  cmd.omega = std::sqrt(force.norm() / params.thrust_coeff);
  if (cmd.omega < params.omega_min) {
    cmd.omega = params.omega_min;
    cmd.omega_clamped = true;
  } else if (cmd.omega > params.omega_max) {
    cmd.omega = params.omega_max;
    cmd.omega_clamped = true;
  }
  return cmd;
}

CableLengths command_cables(const NozzleCommand& cmd, const NozzleGeometry& geom,
                            double arc_length) {
  return config_to_drive({cmd.alpha, cmd.beta, arc_length}, geom);
}

// ---------------------------------------------------------------------------
// Locked-angle helpers

LockedAngles LockedAngles::straight() { return {}; }

LockedAngles LockedAngles::pinch(double alpha) {
  LockedAngles l;
  l.alpha = {alpha, alpha, alpha, alpha};
  l.beta = {deg2rad(90.0), deg2rad(90.0), deg2rad(270.0), deg2rad(270.0)};
  return l;
}

LockedAngles LockedAngles::pinch_open(double alpha) {
  LockedAngles l = pinch(alpha);
  for (double& b : l.beta) b = wrap_angle_2pi(b + kPi);
  return l;
}

LockedAngles LockedAngles::radial_inward(double alpha) {
  LockedAngles l;
  VehicleParams reference;  // azimuths depend only on the mount sign pattern
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d mount = reference.nozzle(i + 1).mount_xy;
    l.alpha[i] = alpha;
    l.beta[i] = wrap_angle_2pi(std::atan2(-mount.y(), -mount.x()));
  }
  return l;
}

LockedAngles LockedAngles::radial_outward(double alpha) {
  LockedAngles l = radial_inward(alpha);
  for (double& b : l.beta) b = wrap_angle_2pi(b + kPi);
  return l;
}

LockedAngles LockedAngles::tangential(double alpha) {
  LockedAngles l;
  VehicleParams reference;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d mount = reference.nozzle(i + 1).mount_xy;
    const double radial = std::atan2(mount.y(), mount.x());
    const double handed = (i % 2 == 0) ? 0.5 * kPi : -0.5 * kPi;
    l.alpha[i] = alpha;
    l.beta[i] = wrap_angle_2pi(radial + handed);
  }
  return l;
}

Eigen::Matrix4d underactuated_matrix(const LockedAngles& locked, const VehicleParams& params) {
  Eigen::Matrix4d e;
  const double a = params.equivalent_lever_fixed();
  for (int i = 0; i < 4; ++i) {
    const double sa = std::sin(locked.alpha[i]), ca = std::cos(locked.alpha[i]);
    const Eigen::Vector3d u(std::cos(locked.beta[i]) * sa, std::sin(locked.beta[i]) * sa, ca);
    const Eigen::Vector2d mount = params.nozzle(i + 1).mount_xy;
    const Eigen::Vector3d lever(mount.x(), mount.y(), a);
    const Eigen::Vector3d m = lever.cross(u);
    e(0, i) = u.z();
    e(1, i) = m.x();
    e(2, i) = m.y();
    e(3, i) = m.z();
  }
  return e;
}

double underactuated_determinant(const Eigen::Matrix4d& e) {
  // Cofactor expansion along the yaw row: a configuration with no yaw
  // authority gives exactly zero, not a rounding residue.
  double det = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (e(3, j) == 0.0) continue;
    Eigen::Matrix3d minor;
    int col = 0;
    for (int k = 0; k < 4; ++k) {
      if (k == j) continue;
      minor.col(col++) = e.block<3, 1>(0, k);
    }
    const double sign = ((3 + j) % 2 == 0) ? 1.0 : -1.0;
    det += sign * e(3, j) * minor.determinant();
  }
  return det;
}

UnderactuatedSolution underactuated_mixer(double fz_desired, const Eigen::Vector3d& moment_desired,
                                          const LockedAngles& locked,
                                          const VehicleParams& params) {
  const Eigen::Matrix4d e = underactuated_matrix(locked, params);

  double scale = 1.0;
  for (int r = 0; r < 4; ++r) scale *= e.row(r).norm();
  const double det = underactuated_determinant(e);
  if (std::abs(det) <= kDetTolerance * scale)
    throw SingularConfigError("locked configuration has no yaw authority (|det| = " +
                              std::to_string(std::abs(det)) + ")");

  Eigen::Vector4d demand;
  demand << fz_desired, moment_desired;
  const Eigen::Vector4d thrust = e.partialPivLu().solve(demand);

  UnderactuatedSolution sol;
  for (int i = 0; i < 4; ++i) {
    double t = thrust(i);
    if (t < -1e-9)
      throw InfeasibleError("locked configuration demands negative thrust " + std::to_string(t) +
                            " N on nozzle " + std::to_string(i + 1));
    t = std::max(t, 0.0);
    sol.thrust[i] = t;
    double omega = std::sqrt(t / params.thrust_coeff);
    if (omega < params.omega_min) {
      omega = params.omega_min;
      sol.omega_clamped[i] = true;
    } else if (omega > params.omega_max) {
      omega = params.omega_max;
      sol.omega_clamped[i] = true;
    }
    sol.omega[i] = omega;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Grasp planning

double grasp_envelope_distance(const GraspTarget& target, const Eigen::Vector3d& tip) {
  switch (target.type) {
    case GraspTarget::Type::kTube:  // axis along body x at (y=0, z=depth)
      return std::hypot(tip.y(), tip.z() - target.depth) - target.radius;
    case GraspTarget::Type::kPlate:  // vertical plate in the x-z plane
      return std::abs(tip.y()) - target.radius;
    case GraspTarget::Type::kPole:  // vertical axis through the body center
      return std::hypot(tip.x(), tip.y()) - target.radius;
    case GraspTarget::Type::kSphere:
      return (tip - Eigen::Vector3d(0.0, 0.0, target.depth)).norm() - target.radius;
  }
  throw DomainError("unknown grasp target type");
}

namespace {

std::array<double, 4> grasp_azimuths(const GraspTarget& target, const VehicleParams& params) {
  switch (target.type) {
    case GraspTarget::Type::kTube:
    case GraspTarget::Type::kPlate:
      return LockedAngles::pinch(0.0).beta;
    case GraspTarget::Type::kPole:
    case GraspTarget::Type::kSphere: {
      std::array<double, 4> beta{};
      for (int i = 0; i < 4; ++i) {
        const Eigen::Vector2d mount = params.nozzle(i + 1).mount_xy;
        beta[i] = wrap_angle_2pi(std::atan2(-mount.y(), -mount.x()));
      }
      return beta;
    }
  }
  throw DomainError("unknown grasp target type");
}

bool cables_feasible(double alpha, const std::array<double, 4>& beta, double arc_length,
                     const VehicleParams& params) {
  for (int i = 0; i < 4; ++i) {
    try {
      config_to_drive({alpha, beta[i], arc_length}, params.nozzle(i + 1));
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

}  // namespace

GraspPlan grasp_plan(const GraspTarget& target, const VehicleParams& params) {
  params.validate();
  if (!(target.radius > 0.0)) throw DomainError("target radius must be > 0");
  if (!(target.arc_length > 0.0) || target.arc_length > params.max_cable_length)
    throw DomainError("grasp arc length outside nozzle capability");

  const std::array<double, 4> beta_in = grasp_azimuths(target, params);
  const double len = target.arc_length;

  // Largest bend the cables can realize at this extension.
  double alpha_hi = params.alpha_max;
  if (!cables_feasible(alpha_hi, beta_in, len, params)) {
    double lo = 0.0, hi = alpha_hi;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cables_feasible(mid, beta_in, len, params) ? lo : hi) = mid;
    }
    alpha_hi = lo;
  }
  if (!(alpha_hi > 0.0)) throw UnreachableError("no feasible bend at the requested extension");

  const NozzleGeometry probe = params.nozzle(1);
  const auto contact_distance = [&](double alpha) {
    return grasp_envelope_distance(target,
                                   nozzle_tip_body(probe, {alpha, beta_in[0], len}));
  };

  // Bracket a zero crossing of the envelope distance, then bisect.
  constexpr int kScan = 128;
  double alpha_contact = -1.0;
  double prev_alpha = 0.0, prev_f = contact_distance(0.0);
  double min_abs = std::abs(prev_f), min_abs_alpha = 0.0;
  if (prev_f == 0.0) alpha_contact = 0.0;
  for (int k = 1; k <= kScan && alpha_contact < 0.0; ++k) {
    const double alpha = alpha_hi * k / kScan;
    const double f = contact_distance(alpha);
    if (std::abs(f) < min_abs) {
      min_abs = std::abs(f);
      min_abs_alpha = alpha;
    }
    if (f == 0.0) {
      alpha_contact = alpha;
      break;
    }
    if (prev_f * f < 0.0) {
      double lo = prev_alpha, hi = alpha, flo = prev_f;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = contact_distance(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (flo * fm < 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      alpha_contact = 0.5 * (lo + hi);
      break;
    }
    prev_alpha = alpha;
    prev_f = f;
  }
  if (alpha_contact < 0.0)
    throw UnreachableError("no bend within " + std::to_string(rad2deg(alpha_hi)) +
                           " deg reaches the target envelope (closest approach " +
                           std::to_string(min_abs) + " m at " +
                           std::to_string(rad2deg(min_abs_alpha)) + " deg)");

  GraspPlan plan;
  plan.contact_alpha = alpha_contact;
  plan.converge.arc_length = len;
  plan.prebend.arc_length = len;
  for (int i = 0; i < 4; ++i) {
    plan.converge.angles.alpha[i] = alpha_contact;
    plan.converge.angles.beta[i] = beta_in[i];
    plan.prebend.angles.beta[i] = wrap_angle_2pi(beta_in[i] + kPi);
  }

  // Pre-bend as far as feasible, at most 20 deg.
  double alpha_pre = std::min(deg2rad(20.0), params.alpha_max);
  while (alpha_pre > 1e-3 &&
         !cables_feasible(alpha_pre, plan.prebend.angles.beta, len, params)) {
    alpha_pre *= 0.9;
  }
  for (int i = 0; i < 4; ++i) plan.prebend.angles.alpha[i] = alpha_pre;

  double residual = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d tip =
        nozzle_tip_body(params.nozzle(i + 1), {alpha_contact, beta_in[i], len});
    residual = std::max(residual, std::abs(grasp_envelope_distance(target, tip)));
  }
  plan.contact_residual = residual;
  return plan;
}

// ---------------------------------------------------------------------------
// Controller

Controller::Controller(const VehicleParams& params, const GainSet& gains, LoopRates rates,
                       double tick_dt)
    : params_(params), gains_(gains), rates_(rates), tick_dt_(tick_dt) {
  params_.validate();
  gains_.validate();
  if (!(tick_dt > 0.0)) throw DomainError("controller tick period must be > 0");
  if (rates_.slow_divisor < 1 || rates_.fast_divisor < 1)
    throw DomainError("loop divisors must be >= 1");
  allocation_ = build_allocation(params_);
  mode_ = ControlMode::fully_actuated();
}

void Controller::slow_tick(const VehicleState& state, const Setpoint6D& sp) {
  const double dt = tick_dt_ * rates_.slow_divisor;
  const Eigen::Vector3d pos_err = sp.position - state.position;
  const Eigen::Vector3d vel_err = sp.velocity - state.velocity;

  for (int ax = 0; ax < 3; ++ax) {
    const bool active = !mode_.is_grasp() || ax == 2;  // grasp mode: altitude only
    if (active) {
      velocity_sp_(ax) = sp.velocity(ax) + position_pid_[ax].step(gains_.position.axis[ax],
                                                                  pos_err(ax), vel_err(ax), dt,
                                                                  gains_.position.integrator_limit,
                                                                  gains_.position.output_limit);
    } else {
      velocity_sp_(ax) = 0.0;
    }
  }

  Eigen::Vector3d att_err = sp.attitude - state.attitude;
  att_err.z() = wrap_angle_pi(att_err.z());
  const Eigen::Vector3d att_rate = euler_rate_matrix(state.attitude) * state.rates;
  for (int ax = 0; ax < 3; ++ax) {
    rate_sp_(ax) = attitude_pid_[ax].step(gains_.attitude.axis[ax], att_err(ax), -att_rate(ax),
                                          dt, gains_.attitude.integrator_limit,
                                          gains_.attitude.output_limit);
  }
}

void Controller::fast_tick(const VehicleState& state) {
  const double dt = tick_dt_ * rates_.fast_divisor;

  // Rate loop -> moment demand, scaled by the inertia diagonal so the
  // gains are angular accelerations.
  const Eigen::Vector3d rate_err = rate_sp_ - state.rates;
  Eigen::Vector3d ang_acc;
  for (int ax = 0; ax < 3; ++ax) {
    ang_acc(ax) = rate_pid_[ax].step(gains_.rate.axis[ax], rate_err(ax), 0.0, dt,
                                     gains_.rate.integrator_limit, gains_.rate.output_limit);
  }
  const Eigen::Vector3d moment(ang_acc.x() * params_.inertia_xx,
                               ang_acc.y() * params_.inertia_yy,
                               ang_acc.z() * params_.inertia_zz);

  ControllerOutput out;
  out.mode = mode_;

  if (!mode_.is_grasp()) {
    // Velocity loop -> inertial force demand with gravity feedforward,
    // rotated into the body frame by the transpose of the force mixing.
    const Eigen::Vector3d vel_err = velocity_sp_ - state.velocity;
    Eigen::Vector3d accel;
    for (int ax = 0; ax < 3; ++ax) {
      accel(ax) = velocity_pid_[ax].step(gains_.velocity.axis[ax], vel_err(ax), 0.0, dt,
                                         gains_.velocity.integrator_limit,
                                         gains_.velocity.output_limit);
    }
    const Eigen::Vector3d force_world =
        params_.mass * accel - Eigen::Vector3d(0.0, 0.0, params_.mass * params_.gravity);
    out.demand.force = body_to_inertial_force_mixing(state.attitude).transpose() * force_world;
    out.demand.moment = moment;

    out.allocation = allocate(out.demand, allocation_);
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector3d f = out.allocation.segment<3>(3 * i);
      const NozzleCommand cmd = soft_mixer(f, params_, prev_beta_[i]);
      prev_beta_[i] = cmd.beta;
      out.commands[i] = cmd;
      if (cmd.alpha_clamped) out.clamp_flags |= 1 << (2 * i);
      if (cmd.omega_clamped) out.clamp_flags |= 1 << (2 * i + 1);
    }
  } else {
    // Altitude loop only; lateral position is not controllable with the
    // nozzles locked.
    const double vel_err_z = velocity_sp_.z() - state.velocity.z();
    const double accel_z = velocity_pid_[2].step(gains_.velocity.axis[2], vel_err_z, 0.0, dt,
                                                 gains_.velocity.integrator_limit,
                                                 gains_.velocity.output_limit);
    const double tilt =
        std::max(0.5, std::cos(state.attitude.x()) * std::cos(state.attitude.y()));
    const double fz = params_.mass * (params_.gravity - accel_z) / tilt;

    const UnderactuatedSolution sol = underactuated_mixer(fz, moment, mode_.locked, params_);
    out.demand.force = Eigen::Vector3d(0.0, 0.0, fz);
    out.demand.moment = moment;
    for (int i = 0; i < 4; ++i) {
      out.commands[i] = {mode_.locked.alpha[i], mode_.locked.beta[i], sol.omega[i], false,
                         sol.omega_clamped[i]};
      prev_beta_[i] = mode_.locked.beta[i];
      if (sol.omega_clamped[i]) out.clamp_flags |= 1 << (2 * i + 1);
      out.allocation.segment<3>(3 * i) =
          nozzle_thrust({mode_.locked.alpha[i], mode_.locked.beta[i], params_.nozzle_length},
                        sol.omega[i], params_.thrust_coeff);
    }
  }

  if (pending_transition_) {
    pending_transition_->force_discontinuity =
        std::abs(out.demand.force.z() - last_demand_.force.z());
    pending_transition_->moment_discontinuity =
        (out.demand.moment - last_demand_.moment).norm();
    transitions_.push_back(*pending_transition_);
    pending_transition_.reset();
  }
  last_demand_ = out.demand;
  held_ = out;
  have_output_ = true;
}

ControllerOutput Controller::tick(const VehicleState& state, const Setpoint6D& sp) {
  if (tick_index_ % rates_.slow_divisor == 0) slow_tick(state, sp);
  if (tick_index_ % rates_.fast_divisor == 0 || !have_output_) fast_tick(state);
  ++tick_index_;
  held_.mode = mode_;
  return held_;
}

TransitionRecord Controller::switch_mode(const ControlMode& requested, const VehicleState& state,
                                         double time) {
  (void)state;
  if (requested.is_grasp()) {
    for (double alpha : requested.locked.alpha) {
      if (alpha < 0.0 || alpha > params_.alpha_max)
        throw SwitchRejectedError("requested lock bend outside [0, alpha_max]");
    }
    const Eigen::Matrix4d e = underactuated_matrix(requested.locked, params_);
    double scale = 1.0;
    for (int r = 0; r < 4; ++r) scale *= e.row(r).norm();
    if (std::abs(underactuated_determinant(e)) <= kDetTolerance * scale)
      throw SwitchRejectedError("requested lock has no yaw authority; switch refused");
  }

  const bool was_grasp = mode_.is_grasp();
  mode_ = requested;
  if (was_grasp && !requested.is_grasp()) {
    // Re-enter fully-actuated control with empty lateral integrators; the
    // shared altitude and attitude loops carry their state across.
    velocity_pid_[0].reset();
    velocity_pid_[1].reset();
    position_pid_[0].reset();
    position_pid_[1].reset();
  }

  TransitionRecord rec;
  rec.time = time;
  rec.to_grasp = requested.is_grasp();
  pending_transition_ = rec;
  return rec;
}

}  // namespace softquad
