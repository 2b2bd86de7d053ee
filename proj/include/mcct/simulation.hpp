#pragma once

#include "mcct/agent.hpp"
#include "mcct/mixedspace.hpp"
#include "mcct/netsim.hpp"
#include "mcct/scenario.hpp"
#include "mcct/telemetry.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace mcct {

/// The set of vehicle agents a run drives, local or remote.
class AgentPool {
 public:
  virtual ~AgentPool() = default;
  /// Advances every agent to t and returns their uplink traffic, grouped by
  /// agent in formation order.
  virtual std::vector<Routed> tick(double t, std::int64_t step, bool report_tick) = 0;
  /// Hands a delivered envelope to the agent owning its recipient. Returns
  /// false when no agent owns it.
  virtual bool deliver(const Envelope& e) = 0;
};

/// Agents living in this process.
class LocalAgentPool : public AgentPool {
 public:
  LocalAgentPool(const Scenario& sc);
  std::vector<Routed> tick(double t, std::int64_t step, bool report_tick) override;
  bool deliver(const Envelope& e) override;
  const std::vector<VehicleAgent>& agents() const { return agents_; }

 private:
  std::vector<VehicleAgent> agents_;
  double dt_;
};

/// Builds the agent for one scenario vehicle; identical in-process and in
/// an agent process.
VehicleAgent make_agent(const Scenario& sc, const ScenarioVehicle& v);
VehicleState initial_state(const Scenario& sc, const ScenarioVehicle& v);

/// Optional callbacks for serving, pacing and tests.
struct SimulationHooks {
  /// Called once per control tick with the broadcast snapshot.
  std::function<void(const wire::Snapshot&)> on_snapshot;
  /// Messages from outside the platoon (consoles) to inject at tick t.
  std::function<std::vector<std::pair<std::string, wire::Message>>(double t)> poll_external;
  /// Deliveries whose recipient no agent owns (consoles).
  std::function<void(const Envelope&)> on_external_delivery;
  /// Called before each physics tick; realtime runs sleep here.
  std::function<void(double t)> pace;
  /// Returns true to stop the run early.
  std::function<bool()> stop;
};

struct RunResult {
  Telemetry telemetry;
  std::size_t stale_messages = 0;
  std::size_t dropped_messages = 0;
  std::size_t off_track_stops = 0;
};

/// Sender names of the cloud's three downlink endpoints.
inline constexpr const char* kCloudVehicleEndpoint = "cloud:vehicle";
inline constexpr const char* kCloudUnityEndpoint = "cloud:unity";
inline constexpr const char* kCloudHmiEndpoint = "cloud:hmi";

/// Closed-loop run of a scenario over the given agents. With a fixed seed
/// and lockstep agents the telemetry is reproducible byte for byte.
RunResult run_simulation(const Scenario& sc, AgentPool& pool, const SimulationHooks& hooks = {});

/// In-process run; realtime mode paces ticks to the wall clock.
RunResult run_scenario(const Scenario& sc, const SimulationHooks& hooks = {});

/// Wall-clock pacing callback: tick t is released at start + t / speed.
std::function<void(double)> wall_clock_pacer(double speed = 1.0);

}  // namespace mcct
