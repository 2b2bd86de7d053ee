#include "mcct/agent.hpp"

#include "mcct/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mcct {

std::string driver_id(const std::string& vehicle_id) { return "driver:" + vehicle_id; }

Routed route_upstream(EntityKind kind, const std::string& vehicle_id, wire::Message msg) {
  if (std::holds_alternative<wire::Obs>(msg)) return {LinkId::CameraUp, kCameraId, std::move(msg)};
  if (std::holds_alternative<wire::Cmd>(msg)) return {LinkId::HmiUp, driver_id(vehicle_id), std::move(msg)};
  switch (kind) {
    case EntityKind::EmulatedPhysical: return {LinkId::VehicleUp, vehicle_id, std::move(msg)};
    case EntityKind::Console: return {LinkId::HmiUp, vehicle_id, std::move(msg)};
    default: return {LinkId::UnityUp, vehicle_id, std::move(msg)};
  }
}

VehicleAgent::VehicleAgent(std::string id, EntityKind kind, VehicleParams params, VehicleState initial, Track track,
                           std::uint64_t seed, LocalizationModel camera, std::optional<HdvScript> script)
    : id_(std::move(id)),
      kind_(kind),
      params_(params),
      state_(initial),
      track_(std::move(track)),
      camera_(camera),
      script_(script),
      noise_rng_(make_stream(seed, "agent:" + id_)),
      camera_rng_(make_stream(seed, "camera:" + id_)),
      driver_rng_(make_stream(seed, "driver:" + id_)) {
  if (kind_ == EntityKind::Console) throw std::invalid_argument("a console is not a vehicle agent");
  if (kind_ == EntityKind::Hdv && !script_) throw std::invalid_argument("HDV agent '" + id_ + "' needs a driver script");
  params_.validate();
  camera_.validate();
}

wire::Register VehicleAgent::registration() const {
  return {id_, entity_kind_name(kind_), kind_ == EntityKind::EmulatedPhysical ? "mini" : "full"};
}

bool VehicleAgent::owns(const std::string& recipient) const {
  return recipient == id_ || (script_ && recipient == driver_id(id_));
}

void VehicleAgent::advance(double t, double dt) {
  while (state_.timestamp < t - 1e-12) {
    const double h = std::min(dt, t - state_.timestamp);
    const double target = state_.timestamp + h;
    if (params_.kind == VehicleKind::EmulatedPhysical) state_ = step_emulated_physical(state_, params_, h, noise_rng_);
    else state_ = step_virtual(state_, params_, h);
    state_.timestamp = target;
  }
  state_.timestamp = t;
}

std::vector<wire::Message> VehicleAgent::emit(double t, bool report_tick) {
  std::vector<wire::Message> out;
  if (report_tick) out.push_back(wire::State{id_, t, state_.pose.x, state_.pose.y, state_.pose.theta, state_.v});

  if (kind_ == EntityKind::EmulatedPhysical) {
    if (is_frame_time(camera_, t)) in_processing_.push_back(observe(id_, state_, camera_, t, camera_rng_));
    while (!in_processing_.empty() && in_processing_.front().available_time <= t + 1e-9) {
      const Observation& o = in_processing_.front();
      const Pose2D p = convert_pose(o.pose, Frame::miniature(), Frame::full());
      out.push_back(wire::Obs{id_, o.capture_time, p.x, p.y, p.theta});
      in_processing_.pop_front();
    }
  }

  if (script_ && report_tick) out.push_back(driver_command(t));
  return out;
}

void VehicleAgent::receive(const wire::Message& msg) {
  if (const auto* c = std::get_if<wire::Cmd>(&msg)) {
    if (c->id != id_ || c->t <= last_cmd_t_) return;
    last_cmd_t_ = c->t;
    state_.v_cmd = std::clamp(c->v_cmd, 0.0, params_.v_max);
    state_.phi_cmd = std::clamp(c->phi_cmd, -params_.steer_max, params_.steer_max);
  } else if (const auto* s = std::get_if<wire::Snapshot>(&msg)) {
    if (!view_ || s->t > view_->t) view_ = *s;
  }
}

wire::Cmd VehicleAgent::driver_command(double t) {
  const HdvScript& sc = *script_;
  const double s_own = track_.project(state_.pose).s;

  if (!script_trigger_ && last_s_ && t >= sc.arm_time) {
    const double moved = track_.wrap(s_own - *last_s_);
    const double to_e = track_.wrap(track_.landmark_e() - *last_s_);
    if (moved < track_.lap_length() / 2.0 && to_e > 0.0 && to_e <= moved) script_trigger_ = t;
  }
  last_s_ = s_own;

  // Follow the vehicle listed ahead of us in the latest snapshot.
  double v = state_.v;
  if (view_) {
    const auto me = std::find_if(view_->vehicles.begin(), view_->vehicles.end(),
                                 [&](const wire::State& s) { return s.id == id_; });
    if (me != view_->vehicles.end() && me != view_->vehicles.begin()) {
      const wire::State& pred = *(me - 1);
      const double s_pred = track_.project({pred.x, pred.y, pred.theta}).s;
      v = pred.v + sc.k_gap * (signed_gap(track_, s_own, s_pred) - sc.d_des);
    }
  }
  if (script_trigger_) {
    const double tau = t - *script_trigger_;
    if (tau < sc.cycles * sc.period) v += sc.amplitude * std::sin(2.0 * EIGEN_PI * tau / sc.period);
  }
  if (sc.jitter_sigma > 0.0) v += std::normal_distribution<double>(0.0, sc.jitter_sigma)(driver_rng_);
  return {id_, t, std::clamp(v, 0.0, params_.v_max), 0.0};
}

}  // namespace mcct
