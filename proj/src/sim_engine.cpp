#include "softquad/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

namespace softquad {

namespace {

constexpr double kGraspStandoff = 0.3;  // m above the grasp altitude
constexpr double kSwitchWindow = 2.0;   // s of post-switch deviation tracking

std::string stamp(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t=%.3f s: ", t);
  return buf;
}

LockedAngles lock_from_pattern(const std::string& pattern, double alpha) {
  if (pattern == "pinch") return LockedAngles::pinch(alpha);
  if (pattern == "pinch_open") return LockedAngles::pinch_open(alpha);
  if (pattern == "radial_inward") return LockedAngles::radial_inward(alpha);
  if (pattern == "radial_outward") return LockedAngles::radial_outward(alpha);
  if (pattern == "tangential") return LockedAngles::tangential(alpha);
  if (pattern == "straight") return LockedAngles::straight();
  throw ConfigError("unknown lock pattern '" + pattern + "'");
}

}  // namespace

double log_quantize(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

Setpoint6D reference_circle(double t, const CircleReference& circle) {
  const double w = kTwoPi / circle.period;
  const double phase = w * t;
  Setpoint6D sp;
  sp.position = circle.center + circle.radius * Eigen::Vector3d(std::cos(phase),
                                                                std::sin(phase), 0.0);
  sp.velocity =
      circle.radius * w * Eigen::Vector3d(-std::sin(phase), std::cos(phase), 0.0);
  sp.attitude = Eigen::Vector3d::Zero();
  return sp;
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw ConfigError("scenario duration must be > 0");
  if (!(dt > 0.0) || dt > 0.01) throw ConfigError("scenario dt must be in (0, 0.01] s");
  if (kind == ReferenceKind::kCircle) {
    if (!(circle.radius > 0.0)) throw ConfigError("circle radius must be > 0");
    if (!(circle.period > 0.0)) throw ConfigError("circle period must be > 0");
  }
  if (kind == ReferenceKind::kWaypoints && waypoints.empty())
    throw ConfigError("waypoint scenario needs at least one waypoint");
  for (std::size_t i = 1; i < mode_schedule.size(); ++i) {
    if (mode_schedule[i].time < mode_schedule[i - 1].time)
      throw ConfigError("mode schedule must be time-ordered");
  }
  if (!(metrics_start_fraction >= 0.0 && metrics_start_fraction < 1.0))
    throw ConfigError("metrics start fraction must be in [0, 1)");
}

VehicleState Scenario::initial_state() const {
  VehicleState s;
  switch (kind) {
    case ReferenceKind::kCircle: {
      const Setpoint6D sp = reference_circle(0.0, circle);
      s.position = sp.position;
      s.velocity = sp.velocity;
      break;
    }
    case ReferenceKind::kWaypoints:
      s.position = waypoints.front().position;
      break;
    case ReferenceKind::kGraspPerch:
      s.position = Eigen::Vector3d(0.0, 0.0,
                                   grasp_world_z - grasp_target.depth - kGraspStandoff);
      break;
    default:
      s.position = hover_position;
      s.attitude = hover_attitude;
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Metrics

Metrics compute_metrics(const TrajectoryLog& log, double metrics_start_fraction,
                        double settle_threshold) {
  Metrics m;
  if (log.records.empty()) return m;

  const double t_end = log.records.back().t;
  const double t_steady = metrics_start_fraction * t_end;
  Eigen::Vector3d sq_sum = Eigen::Vector3d::Zero();
  std::size_t steady_count = 0;
  const double yaw0 = log.records.front().state.attitude.z();
  std::size_t clamped = 0;
  double settle = 0.0;
  bool settled = true;

  for (const LogRecord& r : log.records) {
    const Eigen::Vector3d err = r.state.position - r.setpoint.position;
    if (r.t >= t_steady) {
      sq_sum += err.cwiseProduct(err);
      ++steady_count;
    }
    m.max_position_error = std::max(m.max_position_error, err.norm());
    m.max_roll = std::max(m.max_roll, std::abs(r.state.attitude.x()));
    m.max_pitch = std::max(m.max_pitch, std::abs(r.state.attitude.y()));
    m.yaw_drift = std::max(m.yaw_drift, std::abs(wrap_angle_pi(r.state.attitude.z() - yaw0)));
    if (r.clamp_flags != 0) ++clamped;
    if (err.norm() >= settle_threshold) {
      settle = r.t;
      settled = false;
    }
  }
  if (steady_count > 0) m.rmse = (sq_sum / double(steady_count)).cwiseSqrt();
  m.settling_time = settled ? settle : ((settle < t_end) ? settle + log.dt : t_end);
  m.clamp_duty = double(clamped) / double(log.records.size());

  // Worst altitude/attitude deviation in a fixed window after each mode
  // change.
  for (std::size_t k = 1; k < log.records.size(); ++k) {
    if (log.records[k].mode == log.records[k - 1].mode) continue;
    const LogRecord& at_switch = log.records[k];
    for (std::size_t j = k; j < log.records.size(); ++j) {
      const LogRecord& r = log.records[j];
      if (r.t > at_switch.t + kSwitchWindow) break;
      m.mode_switch_altitude_dev =
          std::max(m.mode_switch_altitude_dev,
                   std::abs(r.state.position.z() - at_switch.state.position.z()));
      const double datt = std::max(
          std::abs(r.state.attitude.x() - at_switch.state.attitude.x()),
          std::abs(r.state.attitude.y() - at_switch.state.attitude.y()));
      m.mode_switch_attitude_dev = std::max(m.mode_switch_attitude_dev, datt);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(const VehicleParams& params, const GainSet& gains, LoopRates rates)
    : params_(params), gains_(gains), rates_(rates) {
  params_.validate();
  gains_.validate();
}

namespace {

struct GraspScript {
  GraspPlan plan;
  double z_grasp = 0.0;
  double z_approach = 0.0;
  double ascend_end = 0.0;
};

Setpoint6D grasp_reference(double t, const Scenario& sc, const GraspScript& script) {
  const GraspScriptTiming& tm = sc.grasp_timing;
  Setpoint6D sp;
  sp.attitude = Eigen::Vector3d::Zero();
  double z = script.z_approach, vz = 0.0;
  if (t >= tm.descend_start && t < tm.descend_end) {
    const double u = (t - tm.descend_start) / (tm.descend_end - tm.descend_start);
    z = script.z_approach + u * (script.z_grasp - script.z_approach);
    vz = (script.z_grasp - script.z_approach) / (tm.descend_end - tm.descend_start);
  } else if (t >= tm.descend_end && t < tm.takeoff_time) {
    z = script.z_grasp;
  } else if (t >= tm.takeoff_time && t < script.ascend_end) {
    const double u = (t - tm.takeoff_time) / (script.ascend_end - tm.takeoff_time);
    z = script.z_grasp + u * (script.z_approach - script.z_grasp);
    vz = (script.z_approach - script.z_grasp) / (script.ascend_end - tm.takeoff_time);
  }
  sp.position = Eigen::Vector3d(0.0, 0.0, z);
  sp.velocity = Eigen::Vector3d(0.0, 0.0, vz);
  return sp;
}

Setpoint6D reference_at(double t, const Scenario& sc, const GraspScript* script) {
  Setpoint6D sp;
  switch (sc.kind) {
    case ReferenceKind::kHover:
    case ReferenceKind::kBallistic:
      sp.position = sc.hover_position;
      sp.attitude = sc.hover_attitude;
      break;
    case ReferenceKind::kCircle:
      return reference_circle(t, sc.circle);
    case ReferenceKind::kStep:
      sp.position = (t < sc.step.step_time) ? sc.hover_position : sc.step.to;
      sp.attitude = sc.hover_attitude;
      break;
    case ReferenceKind::kWaypoints: {
      const Waypoint* active = &sc.waypoints.front();
      for (const Waypoint& w : sc.waypoints) {
        if (w.time <= t) active = &w;
      }
      sp.position = active->position;
      sp.attitude = Eigen::Vector3d(0.0, 0.0, active->yaw);
      break;
    }
    case ReferenceKind::kGraspPerch:
      return grasp_reference(t, sc, *script);
  }
  return sp;
}

void quantize_record(LogRecord& r) {
  r.t = log_quantize(r.t);
  for (auto* v : {&r.state.position, &r.state.velocity, &r.state.attitude, &r.state.rates,
                  &r.setpoint.position, &r.setpoint.velocity, &r.setpoint.attitude,
                  &r.demand.force, &r.demand.moment}) {
    for (int i = 0; i < 3; ++i) (*v)(i) = log_quantize((*v)(i));
  }
  for (int i = 0; i < 12; ++i) r.allocation(i) = log_quantize(r.allocation(i));
  for (NozzleCommand& c : r.commands) {
    c.alpha = log_quantize(c.alpha);
    c.beta = log_quantize(c.beta);
    c.omega = log_quantize(c.omega);
  }
}

template <typename E>
[[noreturn]] void rethrow_stamped(const E& e, double t) {
  throw E(stamp(t) + e.what());
}

}  // namespace

RunResult Simulation::run(const Scenario& scenario) const {
  scenario.validate();

  // Grasp scenarios resolve their geometry before any motion; an
  // unreachable target aborts here.
  std::optional<GraspScript> script;
  if (scenario.kind == ReferenceKind::kGraspPerch) {
    GraspScript s;
    s.plan = grasp_plan(scenario.grasp_target, params_);
    s.z_grasp = scenario.grasp_world_z - scenario.grasp_target.depth;
    s.z_approach = s.z_grasp - kGraspStandoff;
    s.ascend_end = scenario.grasp_timing.takeoff_time +
                   (scenario.grasp_timing.descend_end - scenario.grasp_timing.descend_start);
    script = s;
  }

  Controller controller(params_, gains_, rates_, scenario.dt);
  VehicleState state = scenario.initial_state();
  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RunResult result;
  result.log.dt = scenario.dt;
  const auto steps = static_cast<std::size_t>(std::llround(scenario.duration / scenario.dt));
  result.log.records.reserve(steps);

  std::size_t next_event = 0;
  double current_arc = params_.nozzle_length;
  bool attached = false;
  VehicleState attach_state;
  bool converge_applied = false, prebend_applied = false, takeoff_applied = false,
       release_applied = false;
  ControllerOutput out;

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = double(k) * scenario.dt;

    // Scheduled mode events.
    while (next_event < scenario.mode_schedule.size() &&
           scenario.mode_schedule[next_event].time <= t) {
      const ModeEvent& ev = scenario.mode_schedule[next_event];
      try {
        if (ev.to_grasp) {
          LockedAngles lock;
          if (ev.pattern == "capture") {
            for (int i = 0; i < 4; ++i) {
              lock.alpha[i] = out.commands[i].alpha;
              lock.beta[i] = out.commands[i].beta;
            }
          } else {
            lock = lock_from_pattern(ev.pattern, ev.alpha);
          }
          controller.switch_mode(ControlMode::grasp_perch(lock), state, t);
        } else {
          controller.switch_mode(ControlMode::fully_actuated(), state, t);
        }
      } catch (const SwitchRejectedError& e) {
        rethrow_stamped(e, t);
      }
      ++next_event;
    }

    // Scripted grasp phases (fixed timed schedule).
    if (script) {
      const GraspScriptTiming& tm = scenario.grasp_timing;
      try {
        if (!prebend_applied && t >= tm.prebend_time) {
          controller.switch_mode(ControlMode::grasp_perch(script->plan.prebend.angles), state,
                                 t);
          current_arc = script->plan.prebend.arc_length;
          prebend_applied = true;
        }
        if (!converge_applied && t >= tm.converge_time) {
          controller.switch_mode(ControlMode::grasp_perch(script->plan.converge.angles), state,
                                 t);
          current_arc = script->plan.converge.arc_length;
          converge_applied = true;
        }
        if (!takeoff_applied && t >= tm.takeoff_time) {
          attached = false;
          controller.switch_mode(ControlMode::grasp_perch(script->plan.prebend.angles), state,
                                 t);
          current_arc = script->plan.prebend.arc_length;
          takeoff_applied = true;
        }
        if (!release_applied && t >= tm.release_time) {
          controller.switch_mode(ControlMode::fully_actuated(), state, t);
          current_arc = params_.nozzle_length;
          release_applied = true;
        }
      } catch (const SwitchRejectedError& e) {
        rethrow_stamped(e, t);
      }
    }

    const Setpoint6D sp = reference_at(t, scenario, script ? &*script : nullptr);

    BodyWrench wrench;  // zero for ballistic scenarios
    if (scenario.kind != ReferenceKind::kBallistic) {
      try {
        out = controller.tick(state, sp);
      } catch (const InfeasibleError& e) {
        rethrow_stamped(e, t);
      } catch (const SingularConfigError& e) {
        rethrow_stamped(e, t);
      } catch (const SingularityError& e) {
        rethrow_stamped(e, t);
      }

      std::array<Eigen::Vector3d, 4> forces;
      std::array<CurvatureConfig, 4> configs;
      for (int i = 0; i < 4; ++i) {
        configs[i] = {out.commands[i].alpha, out.commands[i].beta, current_arc};
        forces[i] = nozzle_thrust(configs[i], out.commands[i].omega, params_.thrust_coeff);
      }
      wrench.force = aggregate_force(forces);
      wrench.moment = scenario.linearized_plant_moment
                          ? aggregate_moment_linearized(forces, params_)
                          : aggregate_moment_exact(forces, configs, params_);
    }

    if (scenario.disturbance.enabled && t >= scenario.disturbance.t_start &&
        t < scenario.disturbance.t_end) {
      wrench.force += scenario.disturbance.force;
      wrench.moment += scenario.disturbance.moment;
    }
    if (scenario.disturbance.enabled && scenario.disturbance.force_noise_std > 0.0) {
      for (int i = 0; i < 3; ++i)
        wrench.force(i) += scenario.disturbance.force_noise_std * gauss(rng);
    }

    LogRecord rec;
    rec.t = t;
    rec.state = state;
    rec.setpoint = sp;
    rec.demand = out.demand;
    rec.allocation = out.allocation;
    rec.commands = out.commands;
    rec.clamp_flags = out.clamp_flags;
    rec.mode = controller.mode().is_grasp() ? 1 : 0;
    quantize_record(rec);
    result.log.records.push_back(rec);

    // Perch attachment: kinematic freeze once the craft has converged on
    // the target at the grasp altitude (geometric validity only).
    if (script && converge_applied && !takeoff_applied && !attached &&
        t >= scenario.grasp_timing.attach_time &&
        script->plan.contact_residual < 1e-6 &&
        std::abs(state.position.z() - script->z_grasp) <=
            scenario.grasp_timing.attach_altitude_tol &&
        std::abs(state.attitude.x()) <= scenario.grasp_timing.attach_attitude_tol &&
        std::abs(state.attitude.y()) <= scenario.grasp_timing.attach_attitude_tol) {
      attached = true;
      attach_state = state;
      attach_state.velocity.setZero();
      attach_state.rates.setZero();
      result.perch_attach_time = t;
    }

    if (attached) {
      state = attach_state;
    } else if (scenario.kind == ReferenceKind::kBallistic) {
      state = step(state, wrench, params_, scenario.dt);
    } else {
      try {
        state = step(state, wrench, params_, scenario.dt);
      } catch (const SingularityError& e) {
        rethrow_stamped(e, t);
      }
    }

    if (!state.finite() || state.position.norm() > scenario.divergence_bound)
      throw DivergenceError(stamp(t) + "state left the divergence bound (" +
                            std::to_string(scenario.divergence_bound) + " m)");
  }

  result.transitions = controller.transitions();
  result.metrics =
      compute_metrics(result.log, scenario.metrics_start_fraction, scenario.settle_threshold);
  return result;
}

}  // namespace softquad
