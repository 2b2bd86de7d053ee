#pragma once

#include "mcct/control.hpp"
#include "mcct/dynamics.hpp"
#include "mcct/geometry.hpp"
#include "mcct/perception.hpp"
#include "mcct/wire.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcct {

enum class EntityKind { Virtual, EmulatedPhysical, Hdv, Console };
enum class ControllerKind { Head, Cacc, Human, None };

const char* entity_kind_name(EntityKind k);  // wire spelling
EntityKind parse_entity_kind(const std::string& s);
const char* controller_name(ControllerKind c);

/// One platoon slot as declared by the scenario.
struct VehicleSpec {
  std::string id;
  EntityKind kind = EntityKind::Virtual;
  ControllerKind controller = ControllerKind::Cacc;
  CaccGains gains;
  bool lane_keep = true;  // human-driven: steer with the preview controller
};

class DuplicateId : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class UnknownVehicle : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};
class StaleMessage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MissingState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EntityRecord {
  std::string id;
  EntityKind kind = EntityKind::Virtual;
  Frame frame = Frame::full();
  ControllerKind controller = ControllerKind::None;
  CaccGains gains;
  bool lane_keep = true;
  double last_update_time = -1.0;

  // Latest accepted inputs, full scale.
  std::optional<wire::State> report;  // virtual/HDV state, or on-board odometry
  std::optional<wire::Obs> fix;       // roadside fix (physical only)

  // Latest human input (pass-through commands).
  std::optional<wire::Cmd> human;
  double pending_dv = 0.0;

  std::optional<wire::Cmd> last_command;
};

struct CoordinatorEvent {
  double t = 0.0;
  std::string type;  // trigger | obstacle | perturb | facility
  std::string id;
  double x = 0.0, y = 0.0, r = 0.0, dv = 0.0;
  std::string state;
};

struct CoordinatorConfig {
  double control_dt = 0.05;
  double arm_time = 5.0;  // warm-up before the perturbation trigger is armed
  PreviewParams preview;
  VehicleParams steering = VehicleParams::virtual_vehicle();  // wheelbase and steer limit for preview
};

/// Fused per-vehicle view used for control, snapshots and telemetry.
struct FusedVehicle {
  std::string id;
  VehicleState state;
  double s = 0.0;
  double gap = 0.0;  // to predecessor; 0 for the head
};

/// The cloud unit. Owns the registry, fuses reports into full-scale states
/// aligned to the query time, and computes platoon commands.
class Coordinator {
 public:
  Coordinator(Track track, std::vector<VehicleSpec> formation, HeadProfile head, CoordinatorConfig config = {});

  const Track& track() const { return track_; }
  const std::vector<VehicleSpec>& formation() const { return formation_; }
  const HeadProfile& head_profile() const { return head_; }

  const EntityRecord& register_entity(const wire::Register& reg);
  bool is_registered(const std::string& id) const { return records_.count(id) != 0; }
  const EntityRecord& record(const std::string& id) const;

  /// Accepts a state report and returns the fused state at t_now.
  VehicleState fuse(const wire::State& report, double t_now);
  /// Accepts a full-scale roadside fix and returns the fused state at t_now.
  VehicleState fuse(const wire::Obs& fix, double t_now);
  /// Accepts a miniature-frame camera observation.
  VehicleState fuse(const Observation& obs, double t_now);

  /// Fused state of a vehicle at t_now; empty until it has a usable source.
  std::optional<VehicleState> fused_state(const std::string& id, double t_now) const;

  /// Routes one delivered message. Stale, unknown-target and malformed
  /// inputs are dropped and counted instead of thrown.
  void ingest(const std::string& sender, const wire::Message& msg, double t_now);

  bool ready(double t_now) const;

  /// Commands for every platoon member, in formation order.
  std::vector<wire::Cmd> control_step(double t_now);

  std::size_t add_obstacle(const wire::Obstacle& o, double t_now);
  void apply_perturb(const std::string& vehicle_id, double dv, double t_now);
  void set_facility(const wire::Facility& f, double t_now);

  wire::Snapshot snapshot(double t_now) const;
  std::vector<FusedVehicle> fused_platoon(double t_now) const;

  std::optional<double> trigger_time() const { return trigger_time_; }
  const std::vector<CoordinatorEvent>& events() const { return events_; }
  std::vector<CoordinatorEvent> take_events();

  std::size_t stale_count() const { return stale_; }
  std::size_t dropped_count() const { return dropped_; }
  /// Commands that stopped a vehicle found beyond the steering controller's
  /// lateral range.
  std::size_t off_track_count() const { return off_track_; }
  const std::vector<wire::Obstacle>& obstacles() const { return obstacles_; }
  std::vector<std::string> consoles() const;

 private:
  EntityRecord& vehicle_record(const std::string& id);
  void accept_time(EntityRecord& r, double stamp, double previous, const char* stream);
  double command_v(const EntityRecord& r, const FusedVehicle& me, const FusedVehicle* pred, const FusedVehicle& head);
  void update_trigger(double s_head, double t_now);

  Track track_;
  std::vector<VehicleSpec> formation_;
  HeadProfile head_;
  CoordinatorConfig config_;
  std::map<std::string, EntityRecord> records_;
  std::vector<wire::Obstacle> obstacles_;
  std::map<std::string, std::string> facilities_;
  std::vector<CoordinatorEvent> events_;
  std::optional<double> trigger_time_;
  std::optional<double> last_head_s_;
  std::size_t stale_ = 0;
  std::size_t dropped_ = 0;
  std::size_t off_track_ = 0;
};

/// Console pedal/steering sample.
struct DriveInput {
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]
  double steer = 0.0;     // [-1, 1]
};

/// v_cmd += (throttle - brake) a_ui dt, floored at 0; phi = steer * steer_max.
wire::Cmd drive_to_cmd(const std::string& id, const DriveInput& in, double v_cmd_prev, double a_ui, double dt,
                       double steer_max, double t);

}  // namespace mcct
