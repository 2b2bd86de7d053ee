#pragma once

#include "mcct/agent.hpp"
#include "mcct/control.hpp"
#include "mcct/dynamics.hpp"
#include "mcct/geometry.hpp"
#include "mcct/mixedspace.hpp"
#include "mcct/netsim.hpp"
#include "mcct/perception.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcct {

/// Scenario rejection naming the offending field, e.g. "vehicles[2].gains.k_p".
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class RunMode { Lockstep, Realtime };

struct ScenarioVehicle {
  VehicleSpec spec;
  VehicleParams params;
  double initial_s = 0.0;  // full-scale arc-length in [0, lap)
  std::optional<HdvScript> script;
};

struct ScenarioEvent {
  double t = 0.0;
  wire::Message msg;  // Obstacle, Perturb or Facility
};

struct Scenario {
  std::string name = "unnamed";
  std::uint64_t seed = 1;
  double duration = 120.0;
  RunMode mode = RunMode::Lockstep;
  double physics_dt = 0.01;
  double control_dt = 0.05;
  double control_offset = 0.01;  // control ticks trail report ticks by this much
  double warmup = 5.0;
  double metrics_tail = 15.0;
  Track track = Track::mcct_loop();
  HeadProfile head;
  std::vector<ScenarioVehicle> vehicles;  // formation order, head first
  std::map<LinkId, LinkModel> links;
  LocalizationModel localization;
  PreviewParams preview;
  std::vector<ScenarioEvent> events;
  std::string source_text;  // canonical JSON the scenario was built from

  /// FNV-1a of source_text, printed as 16 hex digits.
  std::string hash() const;
  std::size_t physics_steps_per_control() const;
  std::size_t control_offset_steps() const;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

/// Parses a scenario document. Lengths, speeds and accelerations are read in
/// the unit system named by the top-level "units" field ("full" by default,
/// or "mini" for miniature-table values, which are scaled by 14).
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// Full-scale distance by which the head spawns short of landmark E.
inline constexpr double kHeadSpawnBeforeE = 40.0;

}  // namespace mcct
