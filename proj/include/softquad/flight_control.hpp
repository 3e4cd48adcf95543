#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "softquad/errors.hpp"
#include "softquad/vehicle_dynamics.hpp"

namespace softquad {

// Hierarchical flight controller: cascaded PID loops produce a desired
// body wrench; in fully-actuated mode the wrench is distributed to the
// four nozzles by a constant-parameter allocation matrix and inverted per
// nozzle by the soft mixer; in grasp/perch mode the nozzle angles are
// locked and only the four rotor speeds are solved for.

struct PidGains {
  double kp = 0.0, ki = 0.0, kd = 0.0;
};

/// Gains for one loop (three axes), plus that loop's integrator clamp and
/// output saturation. The integrator limit bounds the integral
/// contribution ki * integral(e), not the raw integral.
struct LoopGains {
  std::array<PidGains, 3> axis{};
  double integrator_limit = 1.0;
  double output_limit = 10.0;
};

struct GainSet {
  LoopGains position;  // outputs velocity setpoints (m/s)
  LoopGains velocity;  // outputs acceleration demands (m/s^2)
  LoopGains attitude;  // outputs body-rate setpoints (rad/s)
  LoopGains rate;      // outputs angular accelerations (rad/s^2), scaled by inertia

  void validate() const;
};

/// One PID axis with clamped-integrator anti-windup and output saturation.
class PidAxis {
 public:
  /// u = kp*e + i + kd*e_rate with i accumulated as ki*e*dt and clamped to
  /// +-integrator_limit; the sum saturates at +-output_limit.
  double step(const PidGains& g, double error, double error_rate, double dt,
              double integrator_limit, double output_limit);

  /// Reset the stored integral contribution (bumpless transfer seeds it).
  void reset(double integral_contribution = 0.0) { integral_ = integral_contribution; }
  double integral_contribution() const { return integral_; }

 private:
  double integral_ = 0.0;
};

struct Setpoint6D {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s feedforward
  Eigen::Vector3d attitude = Eigen::Vector3d::Zero();  // desired roll/pitch/yaw, rad
};

/// The 6x12 map from stacked per-nozzle forces to the body wrench, and its
/// minimal-norm right inverse A+ = A^T (A A^T)^-1.
struct AllocationMatrix {
  Eigen::Matrix<double, 6, 12> matrix = Eigen::Matrix<double, 6, 12>::Zero();
  Eigen::Matrix<double, 12, 6> pseudo_inverse = Eigen::Matrix<double, 12, 6>::Zero();
  double lever = 0.0;       // a = 0.5135 * s
  double planar_arm = 0.0;  // c = (sqrt(2)/2) * l
};

/// Assemble the allocation matrix from the vehicle geometry and verify its
/// invariants (full row rank, A * A+ = I). Throws ConditioningError if the
/// normal matrix is numerically singular (degenerate geometry).
AllocationMatrix build_allocation(const VehicleParams& params);

/// Minimal-norm distribution of a desired wrench over the twelve nozzle
/// force components.
Eigen::Matrix<double, 12, 1> allocate(const BodyWrench& desired, const AllocationMatrix& alloc);

/// Actuator-space command for one nozzle.
struct NozzleCommand {
  double alpha = 0.0;  // rad
  double beta = 0.0;   // rad
  double omega = 0.0;  // rad/s
  bool alpha_clamped = false;
  bool omega_clamped = false;
};

/// Invert one nozzle's force into (alpha, beta, omega). beta holds its
/// previous value when the lateral force vanishes; alpha and omega are
/// clamped to their bounds with the clamp reported in the command flags.
/// Throws InfeasibleError when the axial component is not positive.
NozzleCommand soft_mixer(const Eigen::Vector3d& force, const VehicleParams& params,
                         double prev_beta);

/// Cable lengths realizing a command at the given arc length.
CableLengths command_cables(const NozzleCommand& cmd, const NozzleGeometry& geom,
                            double arc_length);

/// A locked bend for all four nozzles (grasp/perch mode).
struct LockedAngles {
  std::array<double, 4> alpha{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> beta{0.0, 0.0, 0.0, 0.0};

  static LockedAngles straight();
  /// Mirror-symmetric pinch about the body x-z plane (pipe grasp): the two
  /// -y nozzles bend toward +y and vice versa. Yaw-capable for alpha > 0.
  static LockedAngles pinch(double alpha);
  /// Pinch with the jaws opened away from the x-z plane.
  static LockedAngles pinch_open(double alpha);
  /// All nozzles bent toward the body center. Zero yaw authority: the
  /// lateral force lines pass through the center column.
  static LockedAngles radial_inward(double alpha);
  static LockedAngles radial_outward(double alpha);
  /// Pure tangential bends with alternating handedness (quadcopter-like
  /// yaw authority).
  static LockedAngles tangential(double alpha);
};

/// Fixed-direction thrust map of a locked configuration: column i maps
/// thrust magnitude T_i to (F_z, M_x, M_y, M_z) with the equivalent-moment
/// lever. The yaw row is identically zero for all-straight locks.
Eigen::Matrix4d underactuated_matrix(const LockedAngles& locked, const VehicleParams& params);

/// Determinant by cofactor expansion along the yaw row, so a zero yaw row
/// yields exactly 0.0.
double underactuated_determinant(const Eigen::Matrix4d& e);

struct UnderactuatedSolution {
  std::array<double, 4> thrust{};  // N
  std::array<double, 4> omega{};   // rad/s
  std::array<bool, 4> omega_clamped{};
};

/// Solve the locked-configuration map for rotor speeds achieving the
/// demanded vertical force and moments. Throws SingularConfigError when
/// the map is (near-)singular and InfeasibleError when a negative thrust
/// would be required.
UnderactuatedSolution underactuated_mixer(double fz_desired, const Eigen::Vector3d& moment_desired,
                                          const LockedAngles& locked, const VehicleParams& params);

struct ControlMode {
  enum class Kind { kFullyActuated, kGraspPerch };
  Kind kind = Kind::kFullyActuated;
  LockedAngles locked;  // meaningful in grasp/perch mode

  bool is_grasp() const { return kind == Kind::kGraspPerch; }
  static ControlMode fully_actuated() { return {}; }
  static ControlMode grasp_perch(const LockedAngles& lock) {
    return {Kind::kGraspPerch, lock};
  }
};

// ---------------------------------------------------------------------------
// Grasp planning

struct GraspTarget {
  enum class Type { kTube, kPlate, kPole, kSphere };
  Type type = Type::kTube;
  double radius = 0.05;      // m, characteristic radius (half-thickness for plates)
  double depth = 0.11;       // m, target axis/center below the mount plane (tube/sphere)
  double arc_length = 0.12;  // m, nozzle extension used for the grasp
};

/// Signed distance from a nozzle-tip point (body frame) to the target
/// contact envelope; zero on the surface, positive outside.
double grasp_envelope_distance(const GraspTarget& target, const Eigen::Vector3d& tip_body);

struct GraspPhase {
  LockedAngles angles;
  double arc_length = 0.12;
};

/// Three-phase grasp schedule: open the nozzles away from the target,
/// approach, then converge until every tip sits on the contact envelope.
struct GraspPlan {
  GraspPhase prebend;       // phase 1: bent away from the target
  GraspPhase converge;      // phase 3: contact lock
  double contact_alpha = 0.0;
  double contact_residual = 0.0;        // m, envelope distance at the solved bend
  double approach_standoff = 0.3;       // m, hover height above the grasp altitude
};

/// Solve the contact bend by bisection on the forward-kinematic envelope
/// distance. Throws UnreachableError when no bend within the nozzle's
/// capability reaches the envelope.
GraspPlan grasp_plan(const GraspTarget& target, const VehicleParams& params);

// ---------------------------------------------------------------------------
// Controller

/// Loop scheduling relative to the controller tick rate: the slow loops
/// (position, attitude) run every `slow_divisor` ticks, the fast loops
/// (velocity, rate) every `fast_divisor` ticks.
struct LoopRates {
  int slow_divisor = 10;
  int fast_divisor = 2;
};

struct ControllerOutput {
  BodyWrench demand;  // commanded wrench (grasp mode: z force and moments)
  Eigen::Matrix<double, 12, 1> allocation = Eigen::Matrix<double, 12, 1>::Zero();
  std::array<NozzleCommand, 4> commands{};
  int clamp_flags = 0;  // bit 2i: alpha clamp on nozzle i+1, bit 2i+1: omega clamp
  ControlMode mode;
};

struct TransitionRecord {
  double time = 0.0;
  bool to_grasp = false;
  double force_discontinuity = 0.0;   // |delta commanded F_z| across the switch, N
  double moment_discontinuity = 0.0;  // ||delta commanded M|| across the switch, N*m
};

/// Deterministic tick-driven controller. Single-owner: advance by calling
/// tick() once per simulation step; no internal threading.
class Controller {
 public:
  Controller(const VehicleParams& params, const GainSet& gains, LoopRates rates, double tick_dt);

  /// Advance one controller tick and return the (possibly held) output.
  ControllerOutput tick(const VehicleState& state, const Setpoint6D& sp);

  /// Switch between fully-actuated and grasp/perch control, re-seeding
  /// integrators for bumpless transfer. Switching into (or re-locking
  /// within) grasp mode validates yaw authority of the requested lock and
  /// throws SwitchRejectedError for singular locks. Returns a record whose
  /// discontinuity fields are finalized on the next fast tick.
  TransitionRecord switch_mode(const ControlMode& requested, const VehicleState& state,
                               double time);

  /// Completed switch records, discontinuities measured one fast tick
  /// after each switch.
  const std::vector<TransitionRecord>& transitions() const { return transitions_; }

  const ControlMode& mode() const { return mode_; }
  const AllocationMatrix& allocation_matrix() const { return allocation_; }
  const VehicleParams& params() const { return params_; }

 private:
  void slow_tick(const VehicleState& state, const Setpoint6D& sp);
  void fast_tick(const VehicleState& state);

  VehicleParams params_;
  GainSet gains_;
  LoopRates rates_;
  double tick_dt_;
  AllocationMatrix allocation_;
  ControlMode mode_;

  std::array<PidAxis, 3> position_pid_, velocity_pid_, attitude_pid_, rate_pid_;
  Eigen::Vector3d velocity_sp_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d rate_sp_ = Eigen::Vector3d::Zero();
  std::array<double, 4> prev_beta_{0.0, 0.0, 0.0, 0.0};
  ControllerOutput held_;
  long tick_index_ = 0;
  bool have_output_ = false;

  std::optional<TransitionRecord> pending_transition_;
  std::vector<TransitionRecord> transitions_;
  BodyWrench last_demand_;
};

}  // namespace softquad
