#include "softquad/config.hpp"

#include <fstream>
#include <set>

#include "softquad/errors.hpp"

namespace softquad {

namespace {

using nlohmann::json;

// Strict-object view: every accepted key is recorded and finish() rejects
// whatever remains, so a typo in a gain name cannot pass silently. Angle
// fields accept either `<name>` in radians or `<name>_deg` in degrees.
class Obj {
 public:
  Obj(const json& j, std::string path, std::vector<std::string>* notices)
      : j_(j), path_(std::move(path)), notices_(notices) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool contains(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def) {
    if (!mark(key)) return noted(key, def);
    return as_number(j_.at(key), key);
  }

  int integer(const std::string& key, int def) {
    if (!mark(key)) return static_cast<int>(noted(key, def));
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + key + ": expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!mark(key)) {
      note(key);
      return def;
    }
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path_ + key + ": expected a boolean");
    return v.get<bool>();
  }

  std::string str(const std::string& key, const std::string& def) {
    if (!mark(key)) {
      note(key);
      return def;
    }
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path_ + key + ": expected a string");
    return v.get<std::string>();
  }

  double angle(const std::string& key, double def_rad) {
    const std::string deg_key = key + "_deg";
    const bool has_rad = j_.contains(key), has_deg = j_.contains(deg_key);
    if (has_rad && has_deg)
      throw ConfigError(path_ + key + ": give either '" + key + "' or '" + deg_key +
                        "', not both");
    if (has_deg) {
      mark(deg_key);
      return deg2rad(as_number(j_.at(deg_key), deg_key));
    }
    if (has_rad) {
      mark(key);
      return as_number(j_.at(key), key);
    }
    note(key);
    return def_rad;
  }

  Eigen::Vector3d vec3(const std::string& key, const Eigen::Vector3d& def) {
    if (!mark(key)) {
      note(key);
      return def;
    }
    return as_vec3(j_.at(key), key);
  }

  Eigen::Vector3d angle_vec3(const std::string& key, const Eigen::Vector3d& def_rad) {
    const std::string deg_key = key + "_deg";
    const bool has_rad = j_.contains(key), has_deg = j_.contains(deg_key);
    if (has_rad && has_deg)
      throw ConfigError(path_ + key + ": give either radians or degrees, not both");
    if (has_deg) {
      mark(deg_key);
      return deg2rad(1.0) * as_vec3(j_.at(deg_key), deg_key);
    }
    if (has_rad) {
      mark(key);
      return as_vec3(j_.at(key), key);
    }
    note(key);
    return def_rad;
  }

  /// Nested object; absent sections fall back wholesale (one notice).
  std::optional<Obj> child(const std::string& key) {
    if (!mark(key)) {
      note(key);
      return std::nullopt;
    }
    return Obj(j_.at(key), path_ + key + ".", notices_);
  }

  const json& raw(const std::string& key) {
    mark(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key()))
        throw ConfigError(path_ + it.key() + ": unknown key");
    }
  }

 private:
  bool mark(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }
  void note(const std::string& key) {
    if (notices_) notices_->push_back(path_ + key + ": missing, using default");
  }
  double noted(const std::string& key, double def) {
    note(key);
    return def;
  }
  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(path_ + key + ": expected a number");
    return v.get<double>();
  }
  Eigen::Vector3d as_vec3(const json& v, const std::string& key) const {
    if (!v.is_array() || v.size() != 3)
      throw ConfigError(path_ + key + ": expected an array of 3 numbers");
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw ConfigError(path_ + key + ": expected numbers");
      out(i) = v[i].get<double>();
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::vector<std::string>* notices_;
  std::set<std::string> seen_;
};

VehicleParams parse_vehicle(std::optional<Obj> o) {
  VehicleParams p;
  if (!o) return p;
  p.mass = o->number("mass", p.mass);
  p.gravity = o->number("gravity", p.gravity);
  if (auto inertia = o->child("inertia")) {
    p.inertia_xx = inertia->number("xx", p.inertia_xx);
    p.inertia_yy = inertia->number("yy", p.inertia_yy);
    p.inertia_zz = inertia->number("zz", p.inertia_zz);
    inertia->finish();
  }
  p.arm_half_diagonal = o->number("arm_half_diagonal", p.arm_half_diagonal);
  p.nozzle_length = o->number("nozzle_length", p.nozzle_length);
  p.cable_offset_radius = o->number("cable_offset_radius", p.cable_offset_radius);
  p.thrust_coeff = o->number("thrust_coeff", p.thrust_coeff);
  if (auto limits = o->child("limits")) {
    p.roll_limit = limits->angle("roll_limit", p.roll_limit);
    p.pitch_limit = limits->angle("pitch_limit", p.pitch_limit);
    p.alpha_max = limits->angle("alpha_max", p.alpha_max);
    p.max_cable_length = limits->number("max_cable_length", p.max_cable_length);
    p.omega_min = limits->number("omega_min", p.omega_min);
    p.omega_max = limits->number("omega_max", p.omega_max);
    limits->finish();
  }
  p.small_angle_attitude_kinematics =
      o->boolean("small_angle_attitude_kinematics", p.small_angle_attitude_kinematics);
  o->finish();
  p.validate();
  return p;
}

LoopGains parse_loop(Obj o, const LoopGains& def) {
  LoopGains g = def;
  for (auto [key, member] : {std::pair{"kp", 0}, std::pair{"ki", 1}, std::pair{"kd", 2}}) {
    if (!o.contains(key)) continue;
    const json& arr = o.raw(key);
    if (!arr.is_array() || arr.size() != 3)
      throw ConfigError(std::string("gains.") + key + ": expected an array of 3 numbers");
    for (int ax = 0; ax < 3; ++ax) {
      if (!arr[ax].is_number())
        throw ConfigError(std::string("gains.") + key + ": expected numbers");
      const double v = arr[ax].get<double>();
      if (member == 0) g.axis[ax].kp = v;
      if (member == 1) g.axis[ax].ki = v;
      if (member == 2) g.axis[ax].kd = v;
    }
  }
  g.integrator_limit = o.number("integrator_limit", def.integrator_limit);
  g.output_limit = o.number("output_limit", def.output_limit);
  o.finish();
  return g;
}

GainSet parse_gains(std::optional<Obj> o, const GainSet& def) {
  GainSet g = def;
  if (!o) return g;
  if (auto c = o->child("position")) g.position = parse_loop(*c, def.position);
  if (auto c = o->child("velocity")) g.velocity = parse_loop(*c, def.velocity);
  if (auto c = o->child("attitude")) g.attitude = parse_loop(*c, def.attitude);
  if (auto c = o->child("rate")) g.rate = parse_loop(*c, def.rate);
  o->finish();
  g.validate();
  return g;
}

ReferenceKind kind_from_string(const std::string& s) {
  if (s == "hover") return ReferenceKind::kHover;
  if (s == "circle") return ReferenceKind::kCircle;
  if (s == "step") return ReferenceKind::kStep;
  if (s == "waypoints") return ReferenceKind::kWaypoints;
  if (s == "grasp_perch") return ReferenceKind::kGraspPerch;
  if (s == "ballistic") return ReferenceKind::kBallistic;
  throw ConfigError("unknown scenario type '" + s + "'");
}

std::string kind_to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::kHover: return "hover";
    case ReferenceKind::kCircle: return "circle";
    case ReferenceKind::kStep: return "step";
    case ReferenceKind::kWaypoints: return "waypoints";
    case ReferenceKind::kGraspPerch: return "grasp_perch";
    case ReferenceKind::kBallistic: return "ballistic";
  }
  throw ConfigError("bad scenario kind");
}

GraspTarget::Type target_type_from_string(const std::string& s) {
  if (s == "tube") return GraspTarget::Type::kTube;
  if (s == "plate") return GraspTarget::Type::kPlate;
  if (s == "pole") return GraspTarget::Type::kPole;
  if (s == "sphere") return GraspTarget::Type::kSphere;
  throw ConfigError("unknown grasp target type '" + s + "'");
}

std::string target_type_to_string(GraspTarget::Type t) {
  switch (t) {
    case GraspTarget::Type::kTube: return "tube";
    case GraspTarget::Type::kPlate: return "plate";
    case GraspTarget::Type::kPole: return "pole";
    case GraspTarget::Type::kSphere: return "sphere";
  }
  throw ConfigError("bad grasp target type");
}

Scenario parse_scenario(const std::string& name, Obj o) {
  Scenario sc;
  sc.name = name;
  sc.kind = kind_from_string(o.str("type", "hover"));
  sc.duration = o.number("duration", sc.duration);
  sc.dt = o.number("dt", sc.dt);
  sc.seed = static_cast<std::uint64_t>(o.number("seed", 0.0));
  sc.hover_position = o.vec3("position", sc.hover_position);
  sc.hover_attitude = o.angle_vec3("attitude", sc.hover_attitude);

  if (auto c = o.child("circle")) {
    sc.circle.center = c->vec3("center", sc.circle.center);
    sc.circle.radius = c->number("radius", sc.circle.radius);
    sc.circle.period = c->number("period", sc.circle.period);
    c->finish();
  }
  if (auto c = o.child("step")) {
    sc.step.to = c->vec3("to", sc.step.to);
    sc.step.step_time = c->number("time", sc.step.step_time);
    c->finish();
  }
  if (o.contains("waypoints")) {
    const json& arr = o.raw("waypoints");
    if (!arr.is_array()) throw ConfigError("waypoints: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Obj w(arr[i], name + ".waypoints[" + std::to_string(i) + "].", nullptr);
      Waypoint wp;
      wp.time = w.number("time", 0.0);
      wp.position = w.vec3("position", Eigen::Vector3d::Zero());
      wp.yaw = w.angle("yaw", 0.0);
      w.finish();
      sc.waypoints.push_back(wp);
    }
  }
  if (auto c = o.child("grasp")) {
    sc.grasp_target.type = target_type_from_string(c->str("target", "tube"));
    sc.grasp_target.radius = c->number("radius", sc.grasp_target.radius);
    sc.grasp_target.depth = c->number("depth", sc.grasp_target.depth);
    sc.grasp_target.arc_length = c->number("arc_length", sc.grasp_target.arc_length);
    sc.grasp_world_z = c->number("world_z", sc.grasp_world_z);
    if (auto t = c->child("timing")) {
      GraspScriptTiming& tm = sc.grasp_timing;
      tm.prebend_time = t->number("prebend", tm.prebend_time);
      tm.descend_start = t->number("descend_start", tm.descend_start);
      tm.descend_end = t->number("descend_end", tm.descend_end);
      tm.converge_time = t->number("converge", tm.converge_time);
      tm.attach_time = t->number("attach", tm.attach_time);
      tm.takeoff_time = t->number("takeoff", tm.takeoff_time);
      tm.release_time = t->number("release", tm.release_time);
      tm.attach_altitude_tol = t->number("attach_altitude_tol", tm.attach_altitude_tol);
      tm.attach_attitude_tol = t->angle("attach_attitude_tol", tm.attach_attitude_tol);
      t->finish();
    }
    c->finish();
  }
  if (auto c = o.child("disturbance")) {
    sc.disturbance.enabled = true;
    sc.disturbance.force = c->vec3("force", Eigen::Vector3d::Zero());
    sc.disturbance.moment = c->vec3("moment", Eigen::Vector3d::Zero());
    sc.disturbance.t_start = c->number("t_start", 0.0);
    sc.disturbance.t_end = c->number("t_end", 0.0);
    sc.disturbance.force_noise_std = c->number("force_noise_std", 0.0);
    c->finish();
  }
  if (o.contains("mode_schedule")) {
    const json& arr = o.raw("mode_schedule");
    if (!arr.is_array()) throw ConfigError("mode_schedule: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Obj e(arr[i], name + ".mode_schedule[" + std::to_string(i) + "].", nullptr);
      ModeEvent ev;
      ev.time = e.number("time", 0.0);
      ev.to_grasp = e.boolean("to_grasp", true);
      ev.pattern = e.str("pattern", ev.pattern);
      ev.alpha = e.angle("alpha", ev.alpha);
      e.finish();
      sc.mode_schedule.push_back(ev);
    }
  }
  sc.linearized_plant_moment = o.boolean("linearized_plant_moment", false);
  sc.divergence_bound = o.number("divergence_bound", sc.divergence_bound);
  sc.metrics_start_fraction = o.number("metrics_start_fraction", sc.metrics_start_fraction);
  sc.settle_threshold = o.number("settle_threshold", sc.settle_threshold);
  o.finish();
  sc.validate();
  return sc;
}

json serialize_loop(const LoopGains& g) {
  json o;
  o["kp"] = {g.axis[0].kp, g.axis[1].kp, g.axis[2].kp};
  o["ki"] = {g.axis[0].ki, g.axis[1].ki, g.axis[2].ki};
  o["kd"] = {g.axis[0].kd, g.axis[1].kd, g.axis[2].kd};
  o["integrator_limit"] = g.integrator_limit;
  o["output_limit"] = g.output_limit;
  return o;
}

json vec3_json(const Eigen::Vector3d& v) { return json{v.x(), v.y(), v.z()}; }

}  // namespace

ConfigDocument default_config() {
  ConfigDocument c;

  auto loop = [](double kp, double ki, double kd, double i_lim, double out_lim) {
    LoopGains g;
    for (auto& a : g.axis) a = {kp, ki, kd};
    g.integrator_limit = i_lim;
    g.output_limit = out_lim;
    return g;
  };
  // Pole-placed on the hover-linearized plant: velocity/rate bandwidths of
  // about 4 and 25 rad/s, outer loops a factor ~3 slower.
  c.gains.position = loop(1.3, 0.0, 0.0, 0.5, 2.5);
  c.gains.velocity = loop(4.0, 2.0, 0.0, 4.0, 8.0);
  c.gains.attitude = loop(8.0, 0.0, 0.0, 1.0, 5.0);
  c.gains.rate = loop(25.0, 8.0, 0.0, 20.0, 150.0);

  Scenario hover;
  hover.name = "hover";
  hover.kind = ReferenceKind::kHover;
  hover.duration = 10.0;
  hover.hover_position = {0.0, 0.0, 1.0};
  c.scenarios["hover"] = hover;

  Scenario circle;
  circle.name = "circle";
  circle.kind = ReferenceKind::kCircle;
  circle.duration = 30.0;
  c.scenarios["circle"] = circle;

  Scenario pitch_hold;
  pitch_hold.name = "pitch_hold";
  pitch_hold.kind = ReferenceKind::kHover;
  pitch_hold.duration = 12.0;
  pitch_hold.hover_position = {0.0, 0.0, 1.0};
  pitch_hold.hover_attitude = {0.0, deg2rad(10.0), 0.0};
  c.scenarios["pitch_hold"] = pitch_hold;

  Scenario step;
  step.name = "step";
  step.kind = ReferenceKind::kStep;
  step.duration = 10.0;
  step.hover_position = {0.0, 0.0, 1.0};
  step.step.to = {1.0, 0.5, 0.8};
  step.step.step_time = 1.0;
  c.scenarios["step"] = step;

  Scenario mode_switch;
  mode_switch.name = "mode_switch";
  mode_switch.kind = ReferenceKind::kHover;
  mode_switch.duration = 12.0;
  mode_switch.hover_position = {0.0, 0.0, 1.0};
  mode_switch.mode_schedule = {{4.0, true, "pinch", deg2rad(20.0)},
                               {8.0, false, "pinch", deg2rad(20.0)}};
  c.scenarios["mode_switch"] = mode_switch;

  Scenario grasp;
  grasp.name = "grasp_perch";
  grasp.kind = ReferenceKind::kGraspPerch;
  grasp.duration = 15.0;
  c.scenarios["grasp_perch"] = grasp;

  Scenario free_fall;
  free_fall.name = "free_fall";
  free_fall.kind = ReferenceKind::kBallistic;
  free_fall.duration = 1.0;
  free_fall.hover_position = {0.0, 0.0, 0.0};
  c.scenarios["free_fall"] = free_fall;

  return c;
}

ConfigDocument parse_config(const json& doc, std::vector<std::string>* notices) {
  const ConfigDocument def = default_config();
  ConfigDocument c;
  Obj root(doc, "", notices);
  c.vehicle = parse_vehicle(root.child("vehicle"));
  c.gains = parse_gains(root.child("gains"), def.gains);
  if (auto r = root.child("loop_rates")) {
    c.loop_rates.slow_divisor = r->integer("slow_divisor", c.loop_rates.slow_divisor);
    c.loop_rates.fast_divisor = r->integer("fast_divisor", c.loop_rates.fast_divisor);
    r->finish();
    if (c.loop_rates.slow_divisor < 1 || c.loop_rates.fast_divisor < 1)
      throw ConfigError("loop_rates: divisors must be >= 1");
  }
  if (root.contains("scenarios")) {
    const json& scens = root.raw("scenarios");
    if (!scens.is_object()) throw ConfigError("scenarios: expected an object");
    for (auto it = scens.begin(); it != scens.end(); ++it) {
      c.scenarios[it.key()] =
          parse_scenario(it.key(), Obj(it.value(), "scenarios." + it.key() + ".", notices));
    }
  } else {
    if (notices) notices->push_back("scenarios: missing, using the default battery");
    c.scenarios = def.scenarios;
  }
  if (auto out = root.child("output")) {
    c.output.dir = out->str("dir", c.output.dir);
    c.output.format = out->str("format", c.output.format);
    c.output.decimation = out->integer("decimation", c.output.decimation);
    out->finish();
    if (c.output.format != "csv")
      throw ConfigError("output.format: only 'csv' is supported");
    if (c.output.decimation < 1) throw ConfigError("output.decimation: must be >= 1");
  }
  root.finish();
  return c;
}

ConfigDocument load_config(const std::string& path, std::vector<std::string>* notices) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(doc, notices);
}

json serialize_config(const ConfigDocument& c) {
  json doc;
  json& v = doc["vehicle"];
  v["mass"] = c.vehicle.mass;
  v["gravity"] = c.vehicle.gravity;
  v["inertia"] = {{"xx", c.vehicle.inertia_xx},
                  {"yy", c.vehicle.inertia_yy},
                  {"zz", c.vehicle.inertia_zz}};
  v["arm_half_diagonal"] = c.vehicle.arm_half_diagonal;
  v["nozzle_length"] = c.vehicle.nozzle_length;
  v["cable_offset_radius"] = c.vehicle.cable_offset_radius;
  v["thrust_coeff"] = c.vehicle.thrust_coeff;
  v["limits"] = {{"roll_limit", c.vehicle.roll_limit},
                 {"pitch_limit", c.vehicle.pitch_limit},
                 {"alpha_max", c.vehicle.alpha_max},
                 {"max_cable_length", c.vehicle.max_cable_length},
                 {"omega_min", c.vehicle.omega_min},
                 {"omega_max", c.vehicle.omega_max}};
  v["small_angle_attitude_kinematics"] = c.vehicle.small_angle_attitude_kinematics;

  doc["gains"] = {{"position", serialize_loop(c.gains.position)},
                  {"velocity", serialize_loop(c.gains.velocity)},
                  {"attitude", serialize_loop(c.gains.attitude)},
                  {"rate", serialize_loop(c.gains.rate)}};
  doc["loop_rates"] = {{"slow_divisor", c.loop_rates.slow_divisor},
                       {"fast_divisor", c.loop_rates.fast_divisor}};

  json scens = json::object();
  for (const auto& [name, sc] : c.scenarios) {
    json s;
    s["type"] = kind_to_string(sc.kind);
    s["duration"] = sc.duration;
    s["dt"] = sc.dt;
    s["seed"] = static_cast<double>(sc.seed);
    s["position"] = vec3_json(sc.hover_position);
    s["attitude"] = vec3_json(sc.hover_attitude);
    if (sc.kind == ReferenceKind::kCircle) {
      s["circle"] = {{"center", vec3_json(sc.circle.center)},
                     {"radius", sc.circle.radius},
                     {"period", sc.circle.period}};
    }
    if (sc.kind == ReferenceKind::kStep) {
      s["step"] = {{"to", vec3_json(sc.step.to)}, {"time", sc.step.step_time}};
    }
    if (!sc.waypoints.empty()) {
      json arr = json::array();
      for (const Waypoint& w : sc.waypoints) {
        arr.push_back({{"time", w.time}, {"position", vec3_json(w.position)}, {"yaw", w.yaw}});
      }
      s["waypoints"] = arr;
    }
    if (sc.kind == ReferenceKind::kGraspPerch) {
      const GraspScriptTiming& tm = sc.grasp_timing;
      s["grasp"] = {{"target", target_type_to_string(sc.grasp_target.type)},
                    {"radius", sc.grasp_target.radius},
                    {"depth", sc.grasp_target.depth},
                    {"arc_length", sc.grasp_target.arc_length},
                    {"world_z", sc.grasp_world_z},
                    {"timing",
                     {{"prebend", tm.prebend_time},
                      {"descend_start", tm.descend_start},
                      {"descend_end", tm.descend_end},
                      {"converge", tm.converge_time},
                      {"attach", tm.attach_time},
                      {"takeoff", tm.takeoff_time},
                      {"release", tm.release_time},
                      {"attach_altitude_tol", tm.attach_altitude_tol},
                      {"attach_attitude_tol", tm.attach_attitude_tol}}}};
    }
    if (sc.disturbance.enabled) {
      s["disturbance"] = {{"force", vec3_json(sc.disturbance.force)},
                          {"moment", vec3_json(sc.disturbance.moment)},
                          {"t_start", sc.disturbance.t_start},
                          {"t_end", sc.disturbance.t_end},
                          {"force_noise_std", sc.disturbance.force_noise_std}};
    }
    if (!sc.mode_schedule.empty()) {
      json arr = json::array();
      for (const ModeEvent& ev : sc.mode_schedule) {
        arr.push_back({{"time", ev.time},
                       {"to_grasp", ev.to_grasp},
                       {"pattern", ev.pattern},
                       {"alpha", ev.alpha}});
      }
      s["mode_schedule"] = arr;
    }
    s["linearized_plant_moment"] = sc.linearized_plant_moment;
    s["divergence_bound"] = sc.divergence_bound;
    s["metrics_start_fraction"] = sc.metrics_start_fraction;
    s["settle_threshold"] = sc.settle_threshold;
    scens[name] = s;
  }
  doc["scenarios"] = scens;
  doc["output"] = {{"dir", c.output.dir},
                   {"format", c.output.format},
                   {"decimation", c.output.decimation}};
  return doc;
}

}  // namespace softquad
