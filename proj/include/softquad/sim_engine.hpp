#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softquad/flight_control.hpp"
#include "softquad/vehicle_dynamics.hpp"

namespace softquad {

// Deterministic scenario execution: wires the controller to the rigid-body
// dynamics at a fixed step, generates reference trajectories, applies
// scripted mode switches and disturbances, and logs every step.

struct CircleReference {
  Eigen::Vector3d center{2.3, 2.8, 1.0};  // m
  double radius = 1.0;                    // m
  double period = 12.0;                   // s (radius and center are given;
                                          // the speed is a configuration choice)
};

struct StepReference {
  Eigen::Vector3d to = Eigen::Vector3d::Zero();
  double step_time = 1.0;  // s
};

struct Waypoint {
  double time = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

/// Body-frame wrench offset over a time window, plus optional seeded
/// force noise (off by default).
struct DisturbanceSpec {
  bool enabled = false;
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();  // N*m
  double t_start = 0.0, t_end = 0.0;                 // s
  double force_noise_std = 0.0;                      // N, per-axis, per-step
};

/// Scheduled mode switch. `pattern` picks one of the LockedAngles
/// factories ("pinch", "pinch_open", "radial_inward", "radial_outward",
/// "tangential", "straight") or "capture" to lock the currently commanded
/// nozzle angles.
struct ModeEvent {
  double time = 0.0;
  bool to_grasp = true;
  std::string pattern = "pinch";
  double alpha = deg2rad(20.0);
};

/// Timing of the scripted grasp/perch sequence (fixed timed schedule).
struct GraspScriptTiming {
  double prebend_time = 3.0;    // switch to grasp mode, jaws open
  double descend_start = 3.5;
  double descend_end = 6.0;     // altitude ramp window
  double converge_time = 7.0;   // jaws close onto the target
  double attach_time = 7.5;     // earliest perch attach check
  double takeoff_time = 10.0;   // jaws open, climb back out
  double release_time = 12.0;   // return to fully-actuated flight
  double attach_altitude_tol = 0.02;          // m
  double attach_attitude_tol = deg2rad(3.0);  // rad
};

enum class ReferenceKind { kHover, kCircle, kStep, kWaypoints, kGraspPerch, kBallistic };

struct Scenario {
  std::string name = "hover";
  double duration = 10.0;  // s
  double dt = 1e-3;        // s
  ReferenceKind kind = ReferenceKind::kHover;

  Eigen::Vector3d hover_position{0.0, 0.0, 1.0};  // m (z down); also step origin
  Eigen::Vector3d hover_attitude{0.0, 0.0, 0.0};  // attitude setpoint, rad
  CircleReference circle;
  StepReference step;
  std::vector<Waypoint> waypoints;

  GraspTarget grasp_target;
  double grasp_world_z = 1.0;  // world z of the target axis/center
  GraspScriptTiming grasp_timing;

  DisturbanceSpec disturbance;
  std::vector<ModeEvent> mode_schedule;

  std::uint64_t seed = 0;
  bool linearized_plant_moment = false;  // plant uses the exact tip moments by default
  double divergence_bound = 100.0;       // m, crash detection
  double metrics_start_fraction = 0.25;  // steady-state window for RMSE
  double settle_threshold = 0.05;        // m

  /// Initial state consistent with the reference at t = 0.
  VehicleState initial_state() const;

  void validate() const;
};

/// One record per simulation step. Every float is quantized to 9
/// significant digits when recorded so a CSV export/reparse cycle is
/// lossless and metrics recomputed from the file match exactly.
struct LogRecord {
  double t = 0.0;
  VehicleState state;
  Setpoint6D setpoint;
  BodyWrench demand;
  Eigen::Matrix<double, 12, 1> allocation = Eigen::Matrix<double, 12, 1>::Zero();
  std::array<NozzleCommand, 4> commands{};
  int clamp_flags = 0;
  int mode = 0;  // 0 fully actuated, 1 grasp/perch
};

struct TrajectoryLog {
  double dt = 1e-3;
  std::vector<LogRecord> records;
};

struct Metrics {
  Eigen::Vector3d rmse = Eigen::Vector3d::Zero();  // per-axis, steady-state window
  double max_position_error = 0.0;                 // m, full run
  double max_roll = 0.0, max_pitch = 0.0;          // rad, full run
  double yaw_drift = 0.0;                          // rad, relative to start
  double settling_time = 0.0;                      // s
  double mode_switch_altitude_dev = 0.0;           // m, worst across switches
  double mode_switch_attitude_dev = 0.0;           // rad
  double clamp_duty = 0.0;                         // fraction of steps clamped
};

struct RunResult {
  TrajectoryLog log;
  Metrics metrics;
  std::vector<TransitionRecord> transitions;
  double perch_attach_time = -1.0;  // s, -1 when the scenario never perched
};

/// Quantize to 9 significant digits (the log/export precision).
double log_quantize(double v);

/// Circle reference: position on the circle, analytic tangent velocity,
/// level attitude.
Setpoint6D reference_circle(double t, const CircleReference& circle);

/// Recompute metrics from a log (used both internally and by the CSV
/// reparse check).
Metrics compute_metrics(const TrajectoryLog& log, double metrics_start_fraction,
                        double settle_threshold);

class Simulation {
 public:
  Simulation(const VehicleParams& params, const GainSet& gains, LoopRates rates = {});

  /// Execute a scenario to completion. Deterministic for a fixed seed.
  /// Throws DivergenceError (with timestamp) if the state leaves the
  /// divergence bound; controller errors propagate with timestamps.
  RunResult run(const Scenario& scenario) const;

  const VehicleParams& params() const { return params_; }

 private:
  VehicleParams params_;
  GainSet gains_;
  LoopRates rates_;
};

}  // namespace softquad
