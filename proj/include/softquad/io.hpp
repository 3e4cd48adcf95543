#pragma once

#include <string>

#include <json.hpp>

#include "softquad/sim_engine.hpp"

namespace softquad {

/// Version-stamped, byte-stable trajectory CSV. Floats are written with 9
/// significant digits, which round-trips exactly because the log is
/// quantized to the same precision at record time.
inline constexpr const char* kCsvSchemaLine = "# softquad trajectory log v1";
inline constexpr const char* kCsvHeader =
    "t,x,y,z,x_d,y_d,z_d,phi,theta,psi,p,q,r,mode,"
    "alpha1,beta1,omega1,alpha2,beta2,omega2,alpha3,beta3,omega3,alpha4,beta4,omega4,"
    "clamp_flags";

/// Write a trajectory log as CSV, keeping every `decimation`-th record.
void export_log(const TrajectoryLog& log, const std::string& path, int decimation = 1);

/// Parse a trajectory CSV back into a log. Only the exported columns are
/// populated; that is sufficient to recompute all metrics exactly.
TrajectoryLog import_log(const std::string& path);

nlohmann::ordered_json metrics_to_json(const Metrics& metrics);
Metrics metrics_from_json(const nlohmann::json& doc);

/// Write metrics as a structured key-value JSON document.
void export_metrics(const Metrics& metrics, const std::string& path);

}  // namespace softquad
