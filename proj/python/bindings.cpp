#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "softquad/config.hpp"
#include "softquad/flight_control.hpp"
#include "softquad/io.hpp"
#include "softquad/nozzle_kinematics.hpp"
#include "softquad/sim_engine.hpp"
#include "softquad/vehicle_dynamics.hpp"

namespace py = pybind11;
using namespace softquad;

namespace {

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["rmse"] = std::vector<double>{m.rmse.x(), m.rmse.y(), m.rmse.z()};
  d["max_position_error"] = m.max_position_error;
  d["max_roll"] = m.max_roll;
  d["max_pitch"] = m.max_pitch;
  d["yaw_drift"] = m.yaw_drift;
  d["settling_time"] = m.settling_time;
  d["mode_switch_altitude_dev"] = m.mode_switch_altitude_dev;
  d["mode_switch_attitude_dev"] = m.mode_switch_attitude_dev;
  d["clamp_duty"] = m.clamp_duty;
  return d;
}

// (t, x, y, z, phi, theta, psi) rows for quick plotting.
py::array_t<double> log_array(const TrajectoryLog& log) {
  py::array_t<double> arr({log.records.size(), std::size_t(7)});
  auto a = arr.mutable_unchecked<2>();
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const LogRecord& r = log.records[k];
    a(k, 0) = r.t;
    a(k, 1) = r.state.position.x();
    a(k, 2) = r.state.position.y();
    a(k, 3) = r.state.position.z();
    a(k, 4) = r.state.attitude.x();
    a(k, 5) = r.state.attitude.y();
    a(k, 6) = r.state.attitude.z();
  }
  return arr;
}

}  // namespace

PYBIND11_MODULE(_softquad, m) {
  m.doc() = "Soft-nozzle thrust-vectoring UAV: kinematics, dynamics, control, simulation";

  py::register_exception<Error>(m, "SoftquadError", PyExc_RuntimeError);

  py::class_<NozzleGeometry>(m, "NozzleGeometry")
      .def(py::init<>())
      .def_readwrite("cable_offset_radius", &NozzleGeometry::cable_offset_radius)
      .def_readwrite("nominal_length", &NozzleGeometry::nominal_length)
      .def_readwrite("index", &NozzleGeometry::index)
      .def_readwrite("mount_xy", &NozzleGeometry::mount_xy)
      .def_readwrite("azimuth_offset", &NozzleGeometry::azimuth_offset)
      .def_readwrite("alpha_max", &NozzleGeometry::alpha_max)
      .def_readwrite("max_cable_length", &NozzleGeometry::max_cable_length)
      .def_static("for_index", &NozzleGeometry::for_index, py::arg("i"), py::arg("h"),
                  py::arg("s"), py::arg("arm_half_diagonal"), py::arg("alpha_max"),
                  py::arg("max_cable_length"));

  py::class_<CurvatureConfig>(m, "CurvatureConfig")
      .def(py::init<>())
      .def(py::init([](double alpha, double beta, double length) {
             return CurvatureConfig{alpha, beta, length};
           }),
           py::arg("bend_angle"), py::arg("bend_azimuth"), py::arg("arc_length"))
      .def_readwrite("bend_angle", &CurvatureConfig::bend_angle)
      .def_readwrite("bend_azimuth", &CurvatureConfig::bend_azimuth)
      .def_readwrite("arc_length", &CurvatureConfig::arc_length)
      .def("curvature", &CurvatureConfig::curvature)
      .def("radius", &CurvatureConfig::radius)
      .def("__repr__", [](const CurvatureConfig& k) {
        return "CurvatureConfig(bend_angle=" + std::to_string(k.bend_angle) +
               ", bend_azimuth=" + std::to_string(k.bend_azimuth) +
               ", arc_length=" + std::to_string(k.arc_length) + ")";
      });

  py::class_<CableLengths>(m, "CableLengths")
      .def(py::init<>())
      .def(py::init([](double m1, double m2, double m3) {
             return CableLengths{m1, m2, m3};
           }),
           py::arg("m1"), py::arg("m2"), py::arg("m3"))
      .def_readwrite("m1", &CableLengths::m1)
      .def_readwrite("m2", &CableLengths::m2)
      .def_readwrite("m3", &CableLengths::m3)
      .def("__repr__", [](const CableLengths& c) {
        return "CableLengths(" + std::to_string(c.m1) + ", " + std::to_string(c.m2) + ", " +
               std::to_string(c.m3) + ")";
      });

  py::class_<TipPose>(m, "TipPose")
      .def_readonly("rotation", &TipPose::rotation)
      .def_readonly("translation", &TipPose::translation);

  m.def("drive_to_config", &drive_to_config, py::arg("cables"), py::arg("geometry"));
  m.def("config_to_drive", &config_to_drive, py::arg("config"), py::arg("geometry"));
  m.def("config_to_pose", &config_to_pose, py::arg("config"));
  m.def("nozzle_thrust", &nozzle_thrust, py::arg("config"), py::arg("omega"),
        py::arg("thrust_coeff"));
  m.def("nozzle_moment_exact", &nozzle_moment_exact, py::arg("force"), py::arg("geometry"),
        py::arg("config"));
  m.def("nozzle_tip_body", &nozzle_tip_body, py::arg("geometry"), py::arg("config"));
  m.def("equivalent_lever", &equivalent_lever, py::arg("alpha"), py::arg("s"));

  py::class_<VehicleParams>(m, "VehicleParams")
      .def(py::init<>())
      .def_readwrite("mass", &VehicleParams::mass)
      .def_readwrite("gravity", &VehicleParams::gravity)
      .def_readwrite("inertia_xx", &VehicleParams::inertia_xx)
      .def_readwrite("inertia_yy", &VehicleParams::inertia_yy)
      .def_readwrite("inertia_zz", &VehicleParams::inertia_zz)
      .def_readwrite("arm_half_diagonal", &VehicleParams::arm_half_diagonal)
      .def_readwrite("nozzle_length", &VehicleParams::nozzle_length)
      .def_readwrite("cable_offset_radius", &VehicleParams::cable_offset_radius)
      .def_readwrite("thrust_coeff", &VehicleParams::thrust_coeff)
      .def_readwrite("alpha_max", &VehicleParams::alpha_max)
      .def_readwrite("max_cable_length", &VehicleParams::max_cable_length)
      .def_readwrite("omega_min", &VehicleParams::omega_min)
      .def_readwrite("omega_max", &VehicleParams::omega_max)
      .def("hover_rotor_speed", &VehicleParams::hover_rotor_speed)
      .def("nozzle", &VehicleParams::nozzle, py::arg("i"));

  py::class_<VehicleState>(m, "VehicleState")
      .def(py::init<>())
      .def_readwrite("position", &VehicleState::position)
      .def_readwrite("velocity", &VehicleState::velocity)
      .def_readwrite("attitude", &VehicleState::attitude)
      .def_readwrite("rates", &VehicleState::rates);

  py::class_<BodyWrench>(m, "BodyWrench")
      .def(py::init<>())
      .def(py::init([](const Eigen::Vector3d& f, const Eigen::Vector3d& mm) {
             return BodyWrench{f, mm};
           }),
           py::arg("force"), py::arg("moment"))
      .def_readwrite("force", &BodyWrench::force)
      .def_readwrite("moment", &BodyWrench::moment);

  m.def(
      "derivatives",
      [](const VehicleState& s, const BodyWrench& w, const VehicleParams& p) {
        const StateDerivative d = derivatives(s, w, p);
        py::dict out;
        out["position_dot"] = d.position_dot;
        out["velocity_dot"] = d.velocity_dot;
        out["attitude_dot"] = d.attitude_dot;
        out["rates_dot"] = d.rates_dot;
        return out;
      },
      py::arg("state"), py::arg("wrench"), py::arg("params"));
  m.def("step", &step, py::arg("state"), py::arg("wrench"), py::arg("params"), py::arg("dt"));

  py::class_<AllocationMatrix>(m, "AllocationMatrix")
      .def_property_readonly("matrix",
                             [](const AllocationMatrix& a) { return Eigen::MatrixXd(a.matrix); })
      .def_property_readonly(
          "pseudo_inverse",
          [](const AllocationMatrix& a) { return Eigen::MatrixXd(a.pseudo_inverse); })
      .def_readonly("lever", &AllocationMatrix::lever)
      .def_readonly("planar_arm", &AllocationMatrix::planar_arm);

  m.def("build_allocation", &build_allocation, py::arg("params"));
  m.def(
      "allocate",
      [](const BodyWrench& w, const AllocationMatrix& a) {
        return Eigen::VectorXd(allocate(w, a));
      },
      py::arg("wrench"), py::arg("allocation"));

  py::class_<NozzleCommand>(m, "NozzleCommand")
      .def_readonly("alpha", &NozzleCommand::alpha)
      .def_readonly("beta", &NozzleCommand::beta)
      .def_readonly("omega", &NozzleCommand::omega)
      .def_readonly("alpha_clamped", &NozzleCommand::alpha_clamped)
      .def_readonly("omega_clamped", &NozzleCommand::omega_clamped);

  m.def("soft_mixer", &soft_mixer, py::arg("force"), py::arg("params"),
        py::arg("prev_beta") = 0.0);

  m.def(
      "run_scenario",
      [](const std::string& config_json, const std::string& scenario) {
        const ConfigDocument config = parse_config(nlohmann::json::parse(config_json));
        const auto it = config.scenarios.find(scenario);
        if (it == config.scenarios.end())
          throw ConfigError("scenario '" + scenario + "' is not defined");
        Simulation sim(config.vehicle, config.gains, config.loop_rates);
        const RunResult result = sim.run(it->second);
        py::dict out;
        out["trajectory"] = log_array(result.log);
        out["metrics"] = metrics_dict(result.metrics);
        out["perch_attach_time"] = result.perch_attach_time;
        return out;
      },
      py::arg("config_json"), py::arg("scenario"),
      "Run a named scenario from a config JSON string; returns trajectory "
      "rows (t, x, y, z, roll, pitch, yaw) and the metrics dict.");

  m.def("default_config_json",
        []() { return serialize_config(default_config()).dump(2); });
}
