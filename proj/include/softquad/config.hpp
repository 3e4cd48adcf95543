#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "softquad/sim_engine.hpp"

namespace softquad {

struct OutputOptions {
  std::string dir = "out";
  std::string format = "csv";
  int decimation = 1;  // export every Nth step
};

/// Everything a run needs: vehicle parameters, controller gains, loop
/// scheduling, named scenarios, and output options. The JSON schema is
/// strict: unknown keys are rejected, missing ones fall back to the
/// built-in default profile with a printed notice.
struct ConfigDocument {
  VehicleParams vehicle;
  GainSet gains;
  LoopRates loop_rates;
  std::map<std::string, Scenario> scenarios;
  OutputOptions output;
};

/// The shipped default profile: reference vehicle parameters, pole-placed
/// gains, and the standard scenario battery.
ConfigDocument default_config();

/// Parse and validate a config JSON. Unknown keys raise ConfigError with
/// their path; defaulted sections are reported through `notices`.
ConfigDocument parse_config(const nlohmann::json& doc, std::vector<std::string>* notices = nullptr);

/// Load a config file (JSON).
ConfigDocument load_config(const std::string& path, std::vector<std::string>* notices = nullptr);

/// Serialize the effective configuration; parse(serialize(c)) == c.
nlohmann::json serialize_config(const ConfigDocument& config);

}  // namespace softquad
