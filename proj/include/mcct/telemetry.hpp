#pragma once

#include "mcct/mixedspace.hpp"
#include "mcct/wire.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcct {

struct TelemetryVehicle {
  std::string id;
  std::string kind;
  std::string controller;
  double d_des = 0.0;
  bool operator==(const TelemetryVehicle&) const = default;
};

struct TelemetryHeader {
  std::string scenario;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  double lap_length = 0.0;
  double physics_dt = 0.0;
  double control_dt = 0.0;
  double base_speed = 0.0;
  double amplitude = 0.0;
  double period = 0.0;
  int cycles = 0;
  double metrics_tail = 15.0;
  std::vector<TelemetryVehicle> vehicles;  // formation order
  bool operator==(const TelemetryHeader&) const = default;
};

/// One vehicle at one control tick. (s, x, y, theta, v) is the vehicle's own
/// state at report time t; the f* fields are the cloud's fused view at the
/// control tick ft, present once the cloud has a usable source.
struct TelemetryRow {
  double t = 0.0;
  std::string id;
  double s = 0.0, x = 0.0, y = 0.0, theta = 0.0, v = 0.0;
  double v_cmd = 0.0, phi_cmd = 0.0;
  double gap = 0.0;  // along-track gap to the predecessor; 0 for the head
  std::optional<double> ft, fx, fy, ftheta, fv;
  bool operator==(const TelemetryRow&) const = default;
};

struct Telemetry {
  TelemetryHeader header;
  std::vector<TelemetryRow> rows;          // ordered by (t, id)
  std::vector<CoordinatorEvent> events;    // ordered by t
};

class MalformedRecord : public std::runtime_error {
 public:
  MalformedRecord(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// JSON lines: header first, then rows and events in time order.
std::string to_jsonl(const Telemetry& t);
std::string to_csv(const Telemetry& t);
Telemetry parse_telemetry(const std::string& jsonl);
Telemetry read_telemetry(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// --- metrics -----------------------------------------------------------

class WindowNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VehicleMetrics {
  std::string id;
  double peak_to_peak = 0.0;        // m/s, inside the perturbation window
  double attenuation = 1.0;         // vs predecessor; 1.0 for the head
  double gap_rms = 0.0;             // m, after the window
  double gap_rms_ratio = 0.0;       // gap_rms / d_des
  double settling_time = 0.0;       // s after the trigger
};

struct MetricsReport {
  double t_trigger = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  bool order_preserved = true;
  std::vector<VehicleMetrics> vehicles;  // formation order
};

/// Ratio of peak-to-peak values with 0/0 read as 1 and x/0 as infinity.
double attenuation_ratio(double p2p, double p2p_predecessor);

MetricsReport compute_metrics(const Telemetry& t, double settle_band = 0.05);
std::string format_metrics(const MetricsReport& m);

// --- replay ------------------------------------------------------------

class InvalidSpeed : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Snapshots rebuilt from the fused columns, one per control tick.
std::vector<wire::Snapshot> replay_snapshots(const Telemetry& t);

/// Emits replay_snapshots at `speed` times real time.
void replay(const Telemetry& t, double speed, const std::function<void(const wire::Snapshot&)>& sink);

}  // namespace mcct
