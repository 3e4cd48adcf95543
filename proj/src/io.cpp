#include "softquad/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "softquad/errors.hpp"

namespace softquad {

namespace {

void append_g9(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out += buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void export_log(const TrajectoryLog& log, const std::string& path, int decimation) {
  if (decimation < 1) throw DomainError("decimation must be >= 1");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing: " + std::strerror(errno));

  std::string buf;
  buf.reserve(512);
  out << kCsvSchemaLine << "\n" << kCsvHeader << "\n";
  for (std::size_t k = 0; k < log.records.size(); k += decimation) {
    const LogRecord& r = log.records[k];
    buf.clear();
    append_g9(buf, r.t);
    for (int i = 0; i < 3; ++i) {
      buf += ',';
      append_g9(buf, r.state.position(i));
    }
    for (int i = 0; i < 3; ++i) {
      buf += ',';
      append_g9(buf, r.setpoint.position(i));
    }
    for (int i = 0; i < 3; ++i) {
      buf += ',';
      append_g9(buf, r.state.attitude(i));
    }
    for (int i = 0; i < 3; ++i) {
      buf += ',';
      append_g9(buf, r.state.rates(i));
    }
    buf += ',';
    buf += std::to_string(r.mode);
    for (const NozzleCommand& c : r.commands) {
      buf += ',';
      append_g9(buf, c.alpha);
      buf += ',';
      append_g9(buf, c.beta);
      buf += ',';
      append_g9(buf, c.omega);
    }
    buf += ',';
    buf += std::to_string(r.clamp_flags);
    out << buf << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed: " + std::strerror(errno));
}

TrajectoryLog import_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "': " + std::strerror(errno));

  std::string line;
  if (!std::getline(in, line) || line != kCsvSchemaLine)
    throw IoError("'" + path + "' is not a softquad trajectory log (bad schema line)");
  if (!std::getline(in, line) || line != kCsvHeader)
    throw IoError("'" + path + "' has an unexpected CSV header");

  TrajectoryLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 27)
      throw IoError("'" + path + "': expected 27 fields, got " + std::to_string(f.size()));
    LogRecord r;
    std::size_t idx = 0;
    auto num = [&] { return std::strtod(f[idx++].c_str(), nullptr); };
    r.t = num();
    for (int i = 0; i < 3; ++i) r.state.position(i) = num();
    for (int i = 0; i < 3; ++i) r.setpoint.position(i) = num();
    for (int i = 0; i < 3; ++i) r.state.attitude(i) = num();
    for (int i = 0; i < 3; ++i) r.state.rates(i) = num();
    r.mode = static_cast<int>(num());
    for (NozzleCommand& c : r.commands) {
      c.alpha = num();
      c.beta = num();
      c.omega = num();
    }
    r.clamp_flags = static_cast<int>(num());
    log.records.push_back(r);
  }
  if (log.records.size() >= 2) log.dt = log.records[1].t - log.records[0].t;
  return log;
}

nlohmann::ordered_json metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json doc;
  doc["schema"] = "softquad.metrics.v1";
  doc["rmse_x"] = log_quantize(m.rmse.x());
  doc["rmse_y"] = log_quantize(m.rmse.y());
  doc["rmse_z"] = log_quantize(m.rmse.z());
  doc["max_position_error"] = log_quantize(m.max_position_error);
  doc["max_roll"] = log_quantize(m.max_roll);
  doc["max_pitch"] = log_quantize(m.max_pitch);
  doc["yaw_drift"] = log_quantize(m.yaw_drift);
  doc["settling_time"] = log_quantize(m.settling_time);
  doc["mode_switch_altitude_dev"] = log_quantize(m.mode_switch_altitude_dev);
  doc["mode_switch_attitude_dev"] = log_quantize(m.mode_switch_attitude_dev);
  doc["clamp_duty"] = log_quantize(m.clamp_duty);
  return doc;
}

Metrics metrics_from_json(const nlohmann::json& doc) {
  Metrics m;
  m.rmse = {doc.at("rmse_x").get<double>(), doc.at("rmse_y").get<double>(),
            doc.at("rmse_z").get<double>()};
  m.max_position_error = doc.at("max_position_error").get<double>();
  m.max_roll = doc.at("max_roll").get<double>();
  m.max_pitch = doc.at("max_pitch").get<double>();
  m.yaw_drift = doc.at("yaw_drift").get<double>();
  m.settling_time = doc.at("settling_time").get<double>();
  m.mode_switch_altitude_dev = doc.at("mode_switch_altitude_dev").get<double>();
  m.mode_switch_attitude_dev = doc.at("mode_switch_attitude_dev").get<double>();
  m.clamp_duty = doc.at("clamp_duty").get<double>();
  return m;
}

void export_metrics(const Metrics& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing: " + std::strerror(errno));
  out << metrics_to_json(metrics).dump(2) << "\n";
  if (!out) throw IoError("write to '" + path + "' failed: " + std::strerror(errno));
}

}  // namespace softquad
