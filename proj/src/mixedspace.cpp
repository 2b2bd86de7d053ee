#include "mcct/mixedspace.hpp"

#include <algorithm>
#include <cmath>

namespace mcct {

const char* entity_kind_name(EntityKind k) {
  switch (k) {
    case EntityKind::Virtual: return "virtual";
    case EntityKind::EmulatedPhysical: return "physical";
    case EntityKind::Hdv: return "hdv";
    case EntityKind::Console: return "console";
  }
  return "?";
}

EntityKind parse_entity_kind(const std::string& s) {
  if (s == "virtual") return EntityKind::Virtual;
  if (s == "physical") return EntityKind::EmulatedPhysical;
  if (s == "hdv") return EntityKind::Hdv;
  if (s == "console") return EntityKind::Console;
  throw std::invalid_argument("unknown entity kind '" + s + "'");
}

const char* controller_name(ControllerKind c) {
  switch (c) {
    case ControllerKind::Head: return "head";
    case ControllerKind::Cacc: return "cacc";
    case ControllerKind::Human: return "human";
    case ControllerKind::None: return "none";
  }
  return "?";
}

Coordinator::Coordinator(Track track, std::vector<VehicleSpec> formation, HeadProfile head, CoordinatorConfig config)
    : track_(std::move(track)), formation_(std::move(formation)), head_(head), config_(config) {
  const auto heads = std::count_if(formation_.begin(), formation_.end(),
                                   [](const VehicleSpec& v) { return v.controller == ControllerKind::Head; });
  if (!formation_.empty() && (heads != 1 || formation_.front().controller != ControllerKind::Head))
    throw std::invalid_argument("formation needs exactly one head vehicle, in first position");
  for (std::size_t i = 0; i < formation_.size(); ++i)
    for (std::size_t j = i + 1; j < formation_.size(); ++j)
      if (formation_[i].id == formation_[j].id) throw DuplicateId("duplicate vehicle id '" + formation_[i].id + "'");
}

const EntityRecord& Coordinator::register_entity(const wire::Register& reg) {
  if (records_.count(reg.id)) throw DuplicateId("entity '" + reg.id + "' is already registered");
  EntityRecord r;
  r.id = reg.id;
  r.kind = parse_entity_kind(reg.kind);
  if (reg.frame == "mini") r.frame = Frame::miniature();
  else if (reg.frame == "full") r.frame = Frame::full();
  else throw std::invalid_argument("unknown frame '" + reg.frame + "'");

  const auto spec = std::find_if(formation_.begin(), formation_.end(),
                                 [&](const VehicleSpec& v) { return v.id == reg.id; });
  if (spec != formation_.end()) {
    if (spec->kind != r.kind)
      throw std::invalid_argument("entity '" + reg.id + "' registered as " + reg.kind + " but the scenario declares " +
                                  entity_kind_name(spec->kind));
    r.controller = spec->controller;
    r.gains = spec->gains;
    r.lane_keep = spec->lane_keep;
  }
  return records_.emplace(reg.id, std::move(r)).first->second;
}

const EntityRecord& Coordinator::record(const std::string& id) const {
  const auto it = records_.find(id);
  if (it == records_.end()) throw UnknownVehicle("unknown entity '" + id + "'");
  return it->second;
}

EntityRecord& Coordinator::vehicle_record(const std::string& id) {
  const auto it = records_.find(id);
  if (it == records_.end() || it->second.kind == EntityKind::Console)
    throw UnknownVehicle("unknown vehicle '" + id + "'");
  return it->second;
}

void Coordinator::accept_time(EntityRecord& r, double stamp, double previous, const char* stream) {
  if (!(stamp > previous))
    throw StaleMessage(std::string(stream) + " for '" + r.id + "' at t=" + std::to_string(stamp) +
                       " is not newer than t=" + std::to_string(previous));
  r.last_update_time = std::max(r.last_update_time, stamp);
}

VehicleState Coordinator::fuse(const wire::State& report, double t_now) {
  EntityRecord& r = vehicle_record(report.id);
  accept_time(r, report.t, r.report ? r.report->t : -1.0, "state report");
  r.report = report;
  return fused_state(report.id, t_now).value_or(VehicleState{});
}

VehicleState Coordinator::fuse(const wire::Obs& fix, double t_now) {
  EntityRecord& r = vehicle_record(fix.id);
  if (r.kind != EntityKind::EmulatedPhysical)
    throw std::invalid_argument("roadside fix for non-physical vehicle '" + fix.id + "'");
  accept_time(r, fix.t_cap, r.fix ? r.fix->t_cap : -1.0, "roadside fix");
  r.fix = fix;
  return fused_state(fix.id, t_now).value_or(VehicleState{});
}

VehicleState Coordinator::fuse(const Observation& obs, double t_now) {
  const Pose2D p = convert_pose(obs.pose, Frame::miniature(), Frame::full());
  return fuse(wire::Obs{obs.vehicle_id, obs.capture_time, p.x, p.y, p.theta}, t_now);
}

std::optional<VehicleState> Coordinator::fused_state(const std::string& id, double t_now) const {
  const auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  const EntityRecord& r = it->second;

  VehicleState s;
  double t_ref = 0.0;
  if (r.kind == EntityKind::EmulatedPhysical) {
    if (!r.fix) return std::nullopt;
    s.pose = {r.fix->x, r.fix->y, r.fix->theta};
    s.v = r.report ? r.report->v : 0.0;
    t_ref = r.fix->t_cap;
  } else if (r.kind == EntityKind::Virtual || r.kind == EntityKind::Hdv) {
    if (!r.report) return std::nullopt;
    s.pose = {r.report->x, r.report->y, r.report->theta};
    s.v = r.report->v;
    t_ref = r.report->t;
  } else {
    return std::nullopt;
  }
  // Dead-reckon across measurement and link latency.
  const double lag = std::max(0.0, t_now - t_ref);
  s.pose.x += s.v * lag * std::cos(s.pose.theta);
  s.pose.y += s.v * lag * std::sin(s.pose.theta);
  s.timestamp = t_now;
  if (r.last_command) {
    s.v_cmd = r.last_command->v_cmd;
    s.phi_cmd = r.last_command->phi_cmd;
  }
  return s;
}

void Coordinator::ingest(const std::string& sender, const wire::Message& msg, double t_now) {
  (void)sender;
  try {
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, wire::Register>) {
            register_entity(m);
          } else if constexpr (std::is_same_v<T, wire::State> || std::is_same_v<T, wire::Obs>) {
            fuse(m, t_now);
          } else if constexpr (std::is_same_v<T, wire::Cmd>) {
            EntityRecord& r = vehicle_record(m.id);
            if (r.controller != ControllerKind::Human)
              throw std::invalid_argument("vehicle '" + m.id + "' does not accept driver commands");
            accept_time(r, m.t, r.human ? r.human->t : -1.0, "driver command");
            r.human = m;
          } else if constexpr (std::is_same_v<T, wire::Obstacle>) {
            add_obstacle(m, t_now);
          } else if constexpr (std::is_same_v<T, wire::Perturb>) {
            apply_perturb(m.id, m.dv, t_now);
          } else if constexpr (std::is_same_v<T, wire::Facility>) {
            set_facility(m, t_now);
          } else {
            throw std::invalid_argument(std::string("coordinator does not accept '") +
                                        std::string(wire::type_name(msg)) + "'");
          }
        },
        msg);
  } catch (const StaleMessage&) {
    ++stale_;
  } catch (const std::exception&) {
    ++dropped_;
  }
}

bool Coordinator::ready(double t_now) const {
  for (const auto& v : formation_)
    if (!fused_state(v.id, t_now)) return false;
  return true;
}

std::vector<FusedVehicle> Coordinator::fused_platoon(double t_now) const {
  std::vector<FusedVehicle> out;
  out.reserve(formation_.size());
  for (const auto& spec : formation_) {
    const auto s = fused_state(spec.id, t_now);
    if (!s) throw MissingState("platoon member '" + spec.id + "' has no fused state");
    FusedVehicle f{spec.id, *s, track_.project(s->pose).s, 0.0};
    if (!out.empty()) f.gap = signed_gap(track_, f.s, out.back().s);
    out.push_back(std::move(f));
  }
  return out;
}

void Coordinator::update_trigger(double s_head, double t_now) {
  if (!trigger_time_ && last_head_s_ && t_now >= config_.arm_time) {
    const double moved = track_.wrap(s_head - *last_head_s_);
    const double to_e = track_.wrap(track_.landmark_e() - *last_head_s_);
    if (moved < track_.lap_length() / 2.0 && to_e > 0.0 && to_e <= moved) {
      trigger_time_ = t_now;
      CoordinatorEvent e;
      e.t = t_now;
      e.type = "trigger";
      e.id = formation_.front().id;
      events_.push_back(e);
    }
  }
  last_head_s_ = s_head;
}

double Coordinator::command_v(const EntityRecord& r, const FusedVehicle& me, const FusedVehicle* pred,
                              const FusedVehicle& head) {
  switch (r.controller) {
    case ControllerKind::Head: {
      std::optional<double> since;
      if (trigger_time_) since = me.state.timestamp - *trigger_time_;
      return head_reference(head_, since);
    }
    case ControllerKind::Cacc: {
      double gap = pred ? me.gap : track_.lap_length();
      double v_prev = pred ? pred->state.v : 0.0;
      double v_head = head.state.v;
      for (const auto& o : obstacles_) {
        const TrackProjection p = track_.project({o.x, o.y, 0.0});
        if (std::abs(p.lateral_error) > o.r + config_.preview.max_lateral) continue;
        const double g = signed_gap(track_, me.s, p.s) - o.r;
        if (g < gap) {
          gap = g;
          v_prev = 0.0;
          v_head = 0.0;
        }
      }
      const double a = cacc_accel_gap(r.gains, gap, me.state.v, v_prev, v_head);
      return accel_to_vcmd(me.state.v, a, config_.control_dt);
    }
    case ControllerKind::Human: return r.human ? std::max(0.0, r.human->v_cmd) : 0.0;
    case ControllerKind::None: break;
  }
  return 0.0;
}

std::vector<wire::Cmd> Coordinator::control_step(double t_now) {
  const auto fused = fused_platoon(t_now);
  std::vector<wire::Cmd> out;
  if (fused.empty()) return out;
  update_trigger(fused.front().s, t_now);

  for (std::size_t i = 0; i < fused.size(); ++i) {
    EntityRecord& r = vehicle_record(fused[i].id);
    wire::Cmd cmd;
    cmd.id = r.id;
    cmd.t = t_now;
    cmd.v_cmd = command_v(r, fused[i], i > 0 ? &fused[i - 1] : nullptr, fused.front()) + r.pending_dv;
    cmd.v_cmd = std::max(0.0, cmd.v_cmd);
    r.pending_dv = 0.0;
    if (r.controller == ControllerKind::Human && !r.lane_keep)
      cmd.phi_cmd = r.human ? std::clamp(r.human->phi_cmd, -config_.steering.steer_max, config_.steering.steer_max)
                            : 0.0;
    else {
      try {
        cmd.phi_cmd = lateral_preview(fused[i].state, track_, config_.steering, config_.preview);
      } catch (const OffTrack&) {
        cmd.v_cmd = 0.0;
        cmd.phi_cmd = 0.0;
        ++off_track_;
      }
    }
    r.last_command = cmd;
    out.push_back(cmd);
  }
  return out;
}

std::size_t Coordinator::add_obstacle(const wire::Obstacle& o, double t_now) {
  if (!(o.r >= 0.0)) throw std::invalid_argument("obstacle radius must be >= 0");
  obstacles_.push_back(o);
  CoordinatorEvent e;
  e.t = t_now;
  e.type = "obstacle";
  e.x = o.x;
  e.y = o.y;
  e.r = o.r;
  events_.push_back(e);
  return obstacles_.size() - 1;
}

void Coordinator::apply_perturb(const std::string& vehicle_id, double dv, double t_now) {
  EntityRecord& r = vehicle_record(vehicle_id);
  r.pending_dv += dv;
  CoordinatorEvent e;
  e.t = t_now;
  e.type = "perturb";
  e.id = vehicle_id;
  e.dv = dv;
  events_.push_back(e);
}

void Coordinator::set_facility(const wire::Facility& f, double t_now) {
  if (!wire::is_valid_facility_state(f.state)) throw std::invalid_argument("invalid facility state '" + f.state + "'");
  facilities_[f.id] = f.state;
  CoordinatorEvent e;
  e.t = t_now;
  e.type = "facility";
  e.id = f.id;
  e.state = f.state;
  events_.push_back(e);
}

wire::Snapshot Coordinator::snapshot(double t_now) const {
  wire::Snapshot snap;
  snap.t = t_now;
  auto add = [&](const std::string& id) {
    if (const auto s = fused_state(id, t_now))
      snap.vehicles.push_back({id, t_now, s->pose.x, s->pose.y, s->pose.theta, s->v});
  };
  for (const auto& v : formation_) add(v.id);
  for (const auto& [id, r] : records_) {
    const bool in_formation = std::any_of(formation_.begin(), formation_.end(),
                                          [&](const VehicleSpec& v) { return v.id == id; });
    if (!in_formation && r.kind != EntityKind::Console) add(id);
  }
  snap.obstacles = obstacles_;
  for (const auto& [id, state] : facilities_) snap.facilities.push_back({id, state});
  return snap;
}

std::vector<std::string> Coordinator::consoles() const {
  std::vector<std::string> out;
  for (const auto& [id, r] : records_)
    if (r.kind == EntityKind::Console) out.push_back(id);
  return out;
}

std::vector<CoordinatorEvent> Coordinator::take_events() {
  std::vector<CoordinatorEvent> out;
  out.swap(events_);
  return out;
}

wire::Cmd drive_to_cmd(const std::string& id, const DriveInput& in, double v_cmd_prev, double a_ui, double dt,
                       double steer_max, double t) {
  const double throttle = std::clamp(in.throttle, 0.0, 1.0);
  const double brake = std::clamp(in.brake, 0.0, 1.0);
  const double steer = std::clamp(in.steer, -1.0, 1.0);
  return {id, t, std::max(0.0, v_cmd_prev + (throttle - brake) * a_ui * dt), steer * steer_max};
}

}  // namespace mcct
