// softquad command-line runner: execute scenarios, validate a
// configuration, batch-run the scenario battery, or answer one-shot
// nozzle kinematics queries.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "softquad/config.hpp"
#include "softquad/flight_control.hpp"
#include "softquad/io.hpp"
#include "softquad/nozzle_kinematics.hpp"
#include "softquad/sim_engine.hpp"

namespace {

using namespace softquad;

int exit_code_for(const std::string& category) {
  static const std::map<std::string, int> codes = {
      {"domain", 2},        {"realizability", 3}, {"singularity", 4},
      {"conditioning", 5},  {"infeasible", 6},    {"singular_config", 7},
      {"unreachable", 8},   {"switch_rejected", 9}, {"divergence", 10},
      {"config", 11},       {"io", 12}};
  const auto it = codes.find(category);
  return it == codes.end() ? 1 : it->second;
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string format = "csv";
  std::uint64_t seed = 0;
  bool seed_set = false;
  double dt = 0.0;  // 0 = keep scenario value
};

ConfigDocument load_effective_config(const CommonOptions& opt) {
  std::vector<std::string> notices;
  ConfigDocument config;
  if (opt.config_path.empty()) {
    config = default_config();
  } else {
    config = load_config(opt.config_path, &notices);
  }
  for (const std::string& n : notices) std::cerr << "note: " << n << "\n";
  if (opt.format != "csv") throw ConfigError("--format: only 'csv' is supported");
  return config;
}

std::string resolve_out_dir(const CommonOptions& opt, const ConfigDocument& config) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  if (const char* env = std::getenv("SOFTQUAD_OUT_DIR"); env && *env) return env;
  return config.output.dir;
}

void apply_overrides(Scenario& sc, const CommonOptions& opt) {
  if (opt.seed_set) sc.seed = opt.seed;
  if (opt.dt > 0.0) sc.dt = opt.dt;
}

void print_metrics(const std::string& name, const Metrics& m) {
  std::printf("%s: rmse = (%.4g, %.4g, %.4g) m, max |err| = %.4g m\n", name.c_str(), m.rmse.x(),
              m.rmse.y(), m.rmse.z(), m.max_position_error);
  std::printf("  max |roll| = %.3f deg, max |pitch| = %.3f deg, yaw drift = %.3f deg\n",
              rad2deg(m.max_roll), rad2deg(m.max_pitch), rad2deg(m.yaw_drift));
  std::printf("  settling = %.3f s, clamp duty = %.4f\n", m.settling_time, m.clamp_duty);
  if (m.mode_switch_altitude_dev > 0.0 || m.mode_switch_attitude_dev > 0.0) {
    std::printf("  switch deviations: altitude %.4g m, attitude %.3f deg\n",
                m.mode_switch_altitude_dev, rad2deg(m.mode_switch_attitude_dev));
  }
}

int run_one(const ConfigDocument& config, const std::string& name, const CommonOptions& opt) {
  const auto it = config.scenarios.find(name);
  if (it == config.scenarios.end())
    throw ConfigError("scenario '" + name + "' is not defined in the configuration");
  Scenario sc = it->second;
  apply_overrides(sc, opt);

  Simulation sim(config.vehicle, config.gains, config.loop_rates);
  const RunResult result = sim.run(sc);

  const std::string dir = resolve_out_dir(opt, config);
  std::filesystem::create_directories(dir);
  const std::string csv_path = dir + "/" + name + ".csv";
  const std::string metrics_path = dir + "/" + name + ".metrics.json";
  export_log(result.log, csv_path, config.output.decimation);
  export_metrics(result.metrics, metrics_path);

  print_metrics(name, result.metrics);
  for (const TransitionRecord& tr : result.transitions) {
    std::printf("  switch @ %.3f s -> %s: |dFz| = %.3g N, |dM| = %.3g N*m\n", tr.time,
                tr.to_grasp ? "grasp/perch" : "fully-actuated", tr.force_discontinuity,
                tr.moment_discontinuity);
  }
  if (result.perch_attach_time >= 0.0)
    std::printf("  perched at %.3f s\n", result.perch_attach_time);
  std::printf("  wrote %s and %s\n", csv_path.c_str(), metrics_path.c_str());
  return 0;
}

int run_validate(const ConfigDocument& config) {
  config.vehicle.validate();
  config.gains.validate();

  const AllocationMatrix alloc = build_allocation(config.vehicle);
  const Eigen::FullPivLU<Eigen::Matrix<double, 6, 12>> lu(alloc.matrix);
  const double identity_err =
      (alloc.matrix * alloc.pseudo_inverse - Eigen::Matrix<double, 6, 6>::Identity())
          .cwiseAbs()
          .maxCoeff();
  std::printf("allocation: rank(A) = %ld, ||A*A+ - I||_max = %.3g\n",
              static_cast<long>(lu.rank()), identity_err);

  const double s = config.vehicle.nozzle_length;
  const double fixed = config.vehicle.equivalent_lever_fixed();
  double worst_rel_true = 0.0, worst_rel_fixed = 0.0;
  constexpr int kSamples = 10000;
  for (int k = 1; k <= kSamples; ++k) {
    const double alpha = config.vehicle.alpha_max * k / kSamples;
    const double exact = equivalent_lever(alpha, s);
    worst_rel_true = std::max(worst_rel_true, std::abs(exact - fixed) / exact);
    worst_rel_fixed = std::max(worst_rel_fixed, std::abs(exact - fixed) / fixed);
  }
  std::printf("equivalent lever: a(0+) = %.4g m, a(alpha_max) = %.6g m (%.4g*s)\n",
              equivalent_lever(0.0, s), equivalent_lever(config.vehicle.alpha_max, s),
              equivalent_lever(config.vehicle.alpha_max, s) / s);
  std::printf("  max |a(alpha) - 0.5135 s| / a(alpha) = %.4f%% (fixed-point bound 2.7%%)\n",
              100.0 * worst_rel_true);
  std::printf("  max |a(alpha) - 0.5135 s| / (0.5135 s) = %.4f%%\n", 100.0 * worst_rel_fixed);

  std::printf("hover rotor speed: %.1f rad/s\n", config.vehicle.hover_rotor_speed());

  for (const auto& [name, sc] : config.scenarios) {
    sc.validate();
    std::printf("scenario '%s': ok (%.3g s at dt = %.3g s)\n", name.c_str(), sc.duration, sc.dt);
  }
  std::printf("configuration valid\n");
  return 0;
}

int run_sweep(const ConfigDocument& config, const CommonOptions& opt) {
  for (const auto& [name, sc] : config.scenarios) {
    (void)sc;
    run_one(config, name, opt);
  }
  return 0;
}

void print_kinematics(const NozzleGeometry& geom, const CurvatureConfig& kappa) {
  const TipPose pose = config_to_pose(kappa);
  const CableLengths cables = config_to_drive(kappa, geom);
  std::printf("configuration: alpha = %.9g deg, beta = %.9g deg, arc length = %.9g m\n",
              rad2deg(kappa.bend_angle), rad2deg(kappa.bend_azimuth), kappa.arc_length);
  std::printf("curvature: %.9g 1/m\n", kappa.curvature());
  std::printf("cables: (%.9g, %.9g, %.9g) m\n", cables.m1, cables.m2, cables.m3);
  std::printf("tip (nozzle frame): (%.9g, %.9g, %.9g) m\n", pose.translation.x(),
              pose.translation.y(), pose.translation.z());
  const Eigen::Vector3d tip_body = nozzle_tip_body(geom, kappa);
  std::printf("tip (body frame):   (%.9g, %.9g, %.9g) m\n", tip_body.x(), tip_body.y(),
              tip_body.z());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softquad: soft-nozzle thrust-vectoring UAV simulator"};
  app.require_subcommand(1);

  CommonOptions opt;
  app.add_option("--config", opt.config_path, "configuration file (JSON)");
  app.add_option("--out", opt.out_dir, "output directory (overrides SOFTQUAD_OUT_DIR)");
  app.add_option("--format", opt.format, "output format (csv)");
  auto* seed_opt = app.add_option("--seed", opt.seed, "override scenario RNG seed");
  app.add_option("--dt", opt.dt, "override scenario time step (s)");

  CLI::App* cmd_run = app.add_subcommand("run", "execute one scenario and write its outputs");
  std::string scenario_name;
  cmd_run->add_option("scenario", scenario_name, "scenario name from the configuration")
      ->required();

  CLI::App* cmd_validate =
      app.add_subcommand("validate", "load the configuration and print an invariant report");
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run every scenario in the configuration");

  CLI::App* cmd_kin = app.add_subcommand("kin", "one-shot nozzle kinematics query");
  std::vector<double> cables_arg, arc_arg;
  int nozzle_index = 1;
  cmd_kin->add_option("--cables", cables_arg, "cable lengths m1 m2 m3 (m)")->expected(3);
  cmd_kin->add_option("--arc", arc_arg, "arc parameters: alpha (deg) beta (deg) length (m)")
      ->expected(3);
  cmd_kin->add_option("--nozzle", nozzle_index, "airframe nozzle slot 1..4");

  CLI11_PARSE(app, argc, argv);
  opt.seed_set = seed_opt->count() > 0;

  try {
    const ConfigDocument config = load_effective_config(opt);
    if (cmd_run->parsed()) return run_one(config, scenario_name, opt);
    if (cmd_validate->parsed()) return run_validate(config);
    if (cmd_sweep->parsed()) return run_sweep(config, opt);
    if (cmd_kin->parsed()) {
      if (nozzle_index < 1 || nozzle_index > 4) throw DomainError("--nozzle must be 1..4");
      const NozzleGeometry geom = config.vehicle.nozzle(nozzle_index);
      if (!cables_arg.empty() && !arc_arg.empty())
        throw ConfigError("give either --cables or --arc, not both");
      if (cables_arg.size() == 3) {
        const CableLengths m{cables_arg[0], cables_arg[1], cables_arg[2]};
        print_kinematics(geom, drive_to_config(m, geom));
        return 0;
      }
      if (arc_arg.size() == 3) {
        const CurvatureConfig kappa{deg2rad(arc_arg[0]), wrap_angle_2pi(deg2rad(arc_arg[1])),
                                    arc_arg[2]};
        print_kinematics(geom, kappa);
        return 0;
      }
      throw ConfigError("kin needs --cables or --arc");
    }
  } catch (const Error& e) {
    std::cerr << "error[" << e.category() << "]: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
