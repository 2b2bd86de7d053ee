#pragma once

#include "mcct/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace mcct::testing {

inline std::string preset_path(const std::string& name) { return std::string(MCCT_SCENARIO_DIR) + "/" + name; }

inline nlohmann::json preset_json(const std::string& name) {
  std::ifstream in(preset_path(name));
  std::stringstream ss;
  ss << in.rdbuf();
  return nlohmann::json::parse(ss.str());
}

inline Scenario scenario_from(const nlohmann::json& j) { return parse_scenario(j.dump()); }

/// Preset with every delay, camera error and process noise removed.
inline nlohmann::json ideal(nlohmann::json j) {
  j["links"] = {{"preset", "zero"}};
  j["localization"] = {{"preset", "noiseless"}};
  j["vehicle_params"]["physical"]["noise_sigma_v"] = 0.0;
  return j;
}

}  // namespace mcct::testing
