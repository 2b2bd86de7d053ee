#include "mcct/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

namespace mcct {

VehicleState initial_state(const Scenario& sc, const ScenarioVehicle& v) {
  VehicleState s;
  s.pose = sc.track.pose_at(v.initial_s);
  s.timestamp = 0.0;
  return s;
}

VehicleAgent make_agent(const Scenario& sc, const ScenarioVehicle& v) {
  return VehicleAgent(v.spec.id, v.spec.kind, v.params, initial_state(sc, v), sc.track, sc.seed, sc.localization,
                      v.script);
}

LocalAgentPool::LocalAgentPool(const Scenario& sc) : dt_(sc.physics_dt) {
  agents_.reserve(sc.vehicles.size());
  for (const auto& v : sc.vehicles) agents_.push_back(make_agent(sc, v));
}

std::vector<Routed> LocalAgentPool::tick(double t, std::int64_t, bool report_tick) {
  for (auto& a : agents_) a.advance(t, dt_);
  std::vector<Routed> out;
  for (auto& a : agents_)
    for (auto& m : a.emit(t, report_tick)) out.push_back(route_upstream(a.kind(), a.id(), std::move(m)));
  return out;
}

bool LocalAgentPool::deliver(const Envelope& e) {
  for (auto& a : agents_) {
    if (a.owns(e.recipient_id)) {
      a.receive(e.payload);
      return true;
    }
  }
  return false;
}

std::function<void(double)> wall_clock_pacer(double speed) {
  const auto start = std::chrono::steady_clock::now();
  return [start, speed](double t) {
    std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                              std::chrono::duration<double>(t / speed)));
  };
}

RunResult run_simulation(const Scenario& sc, AgentPool& pool, const SimulationHooks& hooks) {
  sc.validate();
  std::vector<VehicleSpec> specs;
  for (const auto& v : sc.vehicles) specs.push_back(v.spec);
  CoordinatorConfig cfg;
  cfg.control_dt = sc.control_dt;
  cfg.arm_time = sc.warmup;
  cfg.preview = sc.preview;
  cfg.steering = VehicleParams::virtual_vehicle();
  Coordinator coord(sc.track, specs, sc.head, cfg);

  MessageBus bus(sc.seed);
  for (const auto& [id, model] : sc.links) bus.register_link(model);

  std::map<std::string, EntityKind> kinds;
  for (const auto& v : sc.vehicles) {
    coord.register_entity({v.spec.id, entity_kind_name(v.spec.kind),
                           v.spec.kind == EntityKind::EmulatedPhysical ? "mini" : "full"});
    kinds[v.spec.id] = v.spec.kind;
  }

  RunResult result;
  Telemetry& tel = result.telemetry;
  tel.header.scenario = sc.name;
  tel.header.scenario_hash = sc.hash();
  tel.header.seed = sc.seed;
  tel.header.lap_length = sc.track.lap_length();
  tel.header.physics_dt = sc.physics_dt;
  tel.header.control_dt = sc.control_dt;
  tel.header.base_speed = sc.head.base_speed;
  tel.header.amplitude = sc.head.amplitude;
  tel.header.period = sc.head.period;
  tel.header.cycles = sc.head.cycles;
  tel.header.metrics_tail = sc.metrics_tail;
  for (const auto& v : sc.vehicles)
    tel.header.vehicles.push_back({v.spec.id, entity_kind_name(v.spec.kind), controller_name(v.spec.controller),
                                   v.spec.controller == ControllerKind::Cacc || v.spec.kind == EntityKind::Hdv
                                       ? v.spec.gains.d_des
                                       : 0.0});

  auto dispatch = [&](double t) {
    for (const Envelope& e : bus.deliver_due(t)) {
      if (e.recipient_id == kCloudId) coord.ingest(e.sender_id, e.payload, t);
      else if (!pool.deliver(e) && hooks.on_external_delivery) hooks.on_external_delivery(e);
    }
  };

  const std::size_t spc = sc.physics_steps_per_control();
  const std::size_t off = sc.control_offset_steps();
  const auto steps = static_cast<std::int64_t>(std::llround(sc.duration / sc.physics_dt));
  std::map<std::string, wire::State> tap;  // each vehicle's own state at the last report tick
  std::size_t next_event = 0;

  for (std::int64_t k = 0; k <= steps; ++k) {
    if (hooks.stop && hooks.stop()) break;
    const double t = static_cast<double>(k) * sc.physics_dt;
    const bool report_tick = k % static_cast<std::int64_t>(spc) == 0;
    const bool control_tick =
        k >= static_cast<std::int64_t>(off) && (k - static_cast<std::int64_t>(off)) % static_cast<std::int64_t>(spc) == 0;
    if (hooks.pace) hooks.pace(t);

    for (Routed& r : pool.tick(t, k, report_tick)) {
      if (report_tick)
        if (const auto* s = std::get_if<wire::State>(&r.msg)) tap[s->id] = *s;
      bus.send(r.link, r.sender, kCloudId, std::move(r.msg), t);
    }
    if (hooks.poll_external)
      for (auto& [sender, msg] : hooks.poll_external(t)) bus.send(LinkId::HmiUp, sender, kCloudId, std::move(msg), t);
    dispatch(t);

    if (control_tick) {
      for (; next_event < sc.events.size() && sc.events[next_event].t <= t + MessageBus::kDeliverySlack; ++next_event)
        coord.ingest("scenario", sc.events[next_event].msg, t);

      if (coord.ready(t)) {
        for (wire::Cmd& cmd : coord.control_step(t)) {
          const bool physical = kinds.at(cmd.id) == EntityKind::EmulatedPhysical;
          const std::string recipient = cmd.id;
          bus.send(physical ? LinkId::VehicleDown : LinkId::UnityDown,
                   physical ? kCloudVehicleEndpoint : kCloudUnityEndpoint, recipient, std::move(cmd), t);
        }
      }

      const wire::Snapshot snap = coord.snapshot(t);
      if (hooks.on_snapshot) hooks.on_snapshot(snap);
      for (const auto& v : sc.vehicles)
        if (v.script) bus.send(LinkId::HmiDown, kCloudHmiEndpoint, driver_id(v.spec.id), snap, t);
      for (const auto& console : coord.consoles()) bus.send(LinkId::HmiDown, kCloudHmiEndpoint, console, snap, t);
      bus.send(LinkId::UnityDown, kCloudUnityEndpoint, kUnityId, snap, t);

      std::vector<TelemetryRow> rows;
      bool has_pred = false;
      double s_pred = 0.0;
      for (const auto& v : sc.vehicles) {
        const auto it = tap.find(v.spec.id);
        if (it == tap.end()) {
          has_pred = false;
          continue;
        }
        const wire::State& st = it->second;
        TelemetryRow row;
        row.t = st.t;
        row.id = st.id;
        row.s = sc.track.project({st.x, st.y, st.theta}).s;
        row.x = st.x;
        row.y = st.y;
        row.theta = st.theta;
        row.v = st.v;
        row.gap = has_pred ? signed_gap(sc.track, row.s, s_pred) : 0.0;
        s_pred = row.s;
        has_pred = true;
        const EntityRecord& rec = coord.record(v.spec.id);
        if (rec.last_command && rec.last_command->t == t) {
          row.v_cmd = rec.last_command->v_cmd;
          row.phi_cmd = rec.last_command->phi_cmd;
        }
        if (const auto f = coord.fused_state(v.spec.id, t)) {
          row.ft = t;
          row.fx = f->pose.x;
          row.fy = f->pose.y;
          row.ftheta = f->pose.theta;
          row.fv = f->v;
        }
        rows.push_back(std::move(row));
      }
      std::sort(rows.begin(), rows.end(), [](const TelemetryRow& a, const TelemetryRow& b) { return a.id < b.id; });
      for (auto& r : rows) tel.rows.push_back(std::move(r));
      for (auto& e : coord.take_events()) tel.events.push_back(std::move(e));
    }
    dispatch(t);
  }

  result.stale_messages = coord.stale_count();
  result.dropped_messages = coord.dropped_count();
  result.off_track_stops = coord.off_track_count();
  return result;
}

RunResult run_scenario(const Scenario& sc, const SimulationHooks& hooks) {
  LocalAgentPool pool(sc);
  SimulationHooks h = hooks;
  if (sc.mode == RunMode::Realtime && !h.pace) h.pace = wall_clock_pacer();
  return run_simulation(sc, pool, h);
}

}  // namespace mcct
