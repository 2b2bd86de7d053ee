#pragma once

#include "mcct/dynamics.hpp"
#include "mcct/geometry.hpp"
#include "mcct/mixedspace.hpp"
#include "mcct/netsim.hpp"
#include "mcct/perception.hpp"
#include "mcct/wire.hpp"

#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mcct {

/// Endpoint names used on the bus.
inline constexpr const char* kCloudId = "cloud";
inline constexpr const char* kCameraId = "camera";
inline constexpr const char* kUnityId = "unity";
std::string driver_id(const std::string& vehicle_id);

/// An uplink message with the link and sender it travels on.
struct Routed {
  LinkId link = LinkId::VehicleUp;
  std::string sender;
  wire::Message msg;
};

/// Link and sender for a message emitted by the agent hosting `vehicle_id`.
Routed route_upstream(EntityKind kind, const std::string& vehicle_id, wire::Message msg);

/// Scripted stand-in for the human driver of an HDV: follows its
/// predecessor from the snapshots it receives, then superimposes a
/// sinusoid once it passes landmark E, plus Gaussian jitter throughout.
struct HdvScript {
  double amplitude = 1.5 * 0.1 * kMiniatureScale;  // m/s
  double period = 3.5;                             // s
  int cycles = 2;
  double jitter_sigma = 0.01 * kMiniatureScale;    // m/s
  double k_gap = 0.4;                              // 1/s
  double d_des = 0.6 * kMiniatureScale;            // m
  double arm_time = 5.0;                           // s
};

/// One vehicle process: integrates its own dynamics, reports its state,
/// hosts the roadside camera view of itself when physical, and runs the
/// scripted driver when it is an HDV.
class VehicleAgent {
 public:
  VehicleAgent(std::string id, EntityKind kind, VehicleParams params, VehicleState initial, Track track,
               std::uint64_t seed, LocalizationModel camera = {}, std::optional<HdvScript> script = std::nullopt);

  const std::string& id() const { return id_; }
  EntityKind kind() const { return kind_; }
  const VehicleState& state() const { return state_; }
  wire::Register registration() const;

  /// True for bus recipients this agent consumes (its id, and its driver).
  bool owns(const std::string& recipient) const;

  /// Integrates to t in steps of at most dt.
  void advance(double t, double dt);

  /// Messages emitted at physics tick t. State reports and driver commands
  /// only go out on report ticks; camera fixes go out as soon as their
  /// processing delay has elapsed.
  std::vector<wire::Message> emit(double t, bool report_tick);

  /// Applies a delivered command or snapshot.
  void receive(const wire::Message& msg);

 private:
  wire::Cmd driver_command(double t);

  std::string id_;
  EntityKind kind_;
  VehicleParams params_;
  VehicleState state_;
  Track track_;
  LocalizationModel camera_;
  std::optional<HdvScript> script_;
  std::mt19937_64 noise_rng_;
  std::mt19937_64 camera_rng_;
  std::mt19937_64 driver_rng_;
  std::deque<Observation> in_processing_;
  double last_cmd_t_ = -1.0;
  std::optional<wire::Snapshot> view_;
  std::optional<double> last_s_;
  std::optional<double> script_trigger_;
};

}  // namespace mcct
