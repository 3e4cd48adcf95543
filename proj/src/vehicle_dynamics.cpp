#include "softquad/vehicle_dynamics.hpp"

#include <cmath>
#include <string>

namespace softquad {

void VehicleParams::validate() const {
  if (!(mass > 0.0)) throw DomainError("mass must be > 0");
  if (!(gravity > 0.0)) throw DomainError("gravity must be > 0");
  if (!(inertia_xx > 0.0 && inertia_yy > 0.0 && inertia_zz > 0.0))
    throw DomainError("inertia diagonal must be > 0");
  if (!(arm_half_diagonal > 0.0)) throw DomainError("arm half-diagonal must be > 0");
  if (!(nozzle_length > 0.0)) throw DomainError("nozzle length must be > 0");
  if (!(cable_offset_radius > 0.0)) throw DomainError("cable offset radius must be > 0");
  if (!(thrust_coeff > 0.0)) throw DomainError("thrust coefficient must be > 0");
  if (!(nozzle_length <= max_cable_length)) throw DomainError("nozzle length exceeds cable limit");
  if (!(omega_max > omega_min) || omega_min < 0.0) throw DomainError("bad rotor speed bounds");
  if (!(alpha_max > 0.0 && alpha_max < 0.5 * kPi)) throw DomainError("bad bend limit");
}

NozzleGeometry VehicleParams::nozzle(int i) const {
  return NozzleGeometry::for_index(i, cable_offset_radius, nozzle_length, arm_half_diagonal,
                                   alpha_max, max_cable_length);
}

std::array<NozzleGeometry, 4> VehicleParams::nozzles() const {
  return {nozzle(1), nozzle(2), nozzle(3), nozzle(4)};
}

double VehicleParams::hover_rotor_speed() const {
  return std::sqrt(mass * gravity / (4.0 * thrust_coeff));
}

bool VehicleState::finite() const {
  return position.allFinite() && velocity.allFinite() && attitude.allFinite() &&
         rates.allFinite();
}

Eigen::Vector3d aggregate_force(const std::array<Eigen::Vector3d, 4>& forces) {
  return forces[0] + forces[1] + forces[2] + forces[3];
}

Eigen::Vector3d aggregate_moment_linearized(const std::array<Eigen::Vector3d, 4>& forces,
                                            const VehicleParams& params) {
  const double a = params.equivalent_lever_fixed();
  const double c = params.planar_arm();
  const double mx = -a * (forces[0].y() + forces[1].y() + forces[2].y() + forces[3].y()) -
                    c * (forces[0].z() + forces[1].z() - forces[2].z() - forces[3].z());
  const double my = a * (forces[0].x() + forces[1].x() + forces[2].x() + forces[3].x()) +
                    c * (forces[0].z() - forces[1].z() - forces[2].z() + forces[3].z());
  const double mz = c * ((forces[0].x() - forces[0].y()) + (forces[1].x() + forces[1].y()) -
                         (forces[2].x() - forces[2].y()) - (forces[3].x() + forces[3].y()));
  return {mx, my, mz};
}

Eigen::Vector3d aggregate_moment_exact(const std::array<Eigen::Vector3d, 4>& forces,
                                       const std::array<CurvatureConfig, 4>& configs,
                                       const VehicleParams& params) {
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (int i = 0; i < 4; ++i) {
    m += nozzle_moment_exact(forces[i], params.nozzle(i + 1), configs[i]);
  }
  return m;
}

double equivalent_lever(double alpha, double s) {
  if (alpha < 0.0) throw DomainError("bend angle must be >= 0");
  if (alpha < 1e-8) {
    return s * (0.5 + alpha * alpha / 24.0);  // tan(a/2)/a series
  }
  return s * std::tan(0.5 * alpha) / alpha;
}

StateDerivative derivatives(const VehicleState& state, const BodyWrench& wrench,
                            const VehicleParams& params) {
  if (std::abs(state.attitude.y()) >= 0.5 * kPi)
    throw SingularityError("pitch " + std::to_string(rad2deg(state.attitude.y())) +
                           " deg reaches the Euler singularity");

  StateDerivative d;
  d.position_dot = state.velocity;
  d.velocity_dot = body_to_inertial_force_mixing(state.attitude) * wrench.force / params.mass +
                   Eigen::Vector3d(0.0, 0.0, params.gravity);

  const double p = state.rates.x(), q = state.rates.y(), r = state.rates.z();
  d.rates_dot = {
      (wrench.moment.x() + q * r * (params.inertia_yy - params.inertia_zz)) / params.inertia_xx,
      (wrench.moment.y() + p * r * (params.inertia_zz - params.inertia_xx)) / params.inertia_yy,
      (wrench.moment.z() + p * q * (params.inertia_xx - params.inertia_yy)) / params.inertia_zz};

  d.attitude_dot = params.small_angle_attitude_kinematics
                       ? state.rates
                       : Eigen::Vector3d(euler_rate_matrix(state.attitude) * state.rates);
  return d;
}

namespace {

VehicleState advance(const VehicleState& s, const StateDerivative& d, double h) {
  VehicleState out;
  out.position = s.position + h * d.position_dot;
  out.velocity = s.velocity + h * d.velocity_dot;
  out.attitude = s.attitude + h * d.attitude_dot;
  out.rates = s.rates + h * d.rates_dot;
  return out;
}

}  // namespace

VehicleState step(const VehicleState& state, const BodyWrench& wrench,
                  const VehicleParams& params, double dt) {
  if (!(dt > 0.0) || dt > 0.01)
    throw DomainError("integrator step must be in (0, 0.01] s, got " + std::to_string(dt));

  const StateDerivative k1 = derivatives(state, wrench, params);
  const StateDerivative k2 = derivatives(advance(state, k1, 0.5 * dt), wrench, params);
  const StateDerivative k3 = derivatives(advance(state, k2, 0.5 * dt), wrench, params);
  const StateDerivative k4 = derivatives(advance(state, k3, dt), wrench, params);

  const double h6 = dt / 6.0;
  VehicleState out;
  out.position = state.position + h6 * (k1.position_dot + 2.0 * k2.position_dot +
                                        2.0 * k3.position_dot + k4.position_dot);
  out.velocity = state.velocity + h6 * (k1.velocity_dot + 2.0 * k2.velocity_dot +
                                        2.0 * k3.velocity_dot + k4.velocity_dot);
  out.attitude = state.attitude + h6 * (k1.attitude_dot + 2.0 * k2.attitude_dot +
                                        2.0 * k3.attitude_dot + k4.attitude_dot);
  out.rates = state.rates + h6 * (k1.rates_dot + 2.0 * k2.rates_dot + 2.0 * k3.rates_dot +
                                  k4.rates_dot);
  return out;
}

}  // namespace softquad
