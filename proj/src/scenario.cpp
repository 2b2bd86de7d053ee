#include "mcct/scenario.hpp"

#include "json.hpp"
#include "mcct/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mcct {

namespace {

using json = nlohmann::json;

/// Cursor over one JSON object that remembers its path for error messages
/// and rejects keys nobody asked for.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_.empty() ? "$" : path_, "expected an object");
  }
  ~Node() = default;

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& raw(const std::string& key) const {
    if (!has(key)) throw ValidationError(at(key), "missing");
    return j_.at(key);
  }
  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ValidationError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(at(key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  std::int64_t integer(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ValidationError(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ValidationError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ValidationError(at(key), "expected true or false");
    return v.get<bool>();
  }
  Node child(const std::string& key) const { return Node(raw(key), at(key)); }
  const json& array(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ValidationError(at(key), "expected an array");
    return v;
  }
  void reject_unknown() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ValidationError(at(k), "unknown field");
  }
  const std::string& path() const { return path_; }
  /// The whole object, with every key marked as consumed.
  const json& all() const {
    for (const auto& [k, v] : j_.items()) seen_.insert(k);
    return j_;
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

LinkId parse_link(const std::string& name, const std::string& path) {
  for (LinkId id : kAllLinks)
    if (name == link_name(id)) return id;
  throw ValidationError(path, "unknown link '" + name + "'");
}

Track parse_track(const Node& n, double unit) {
  const std::string type = n.string("type", "mcct-loop");
  if (type == "mcct-loop") {
    const double spacing = n.number("max_spacing", 0.25 / unit) * unit;
    if (!(spacing > 0.0)) throw ValidationError(n.at("max_spacing"), "must be > 0");
    n.reject_unknown();
    return Track::mcct_loop(spacing);
  }
  if (type != "waypoints") throw ValidationError(n.at("type"), "expected 'mcct-loop' or 'waypoints'");
  std::vector<Eigen::Vector2d> pts;
  const json& arr = n.array("points");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& p = arr[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ValidationError(index_path(n.at("points"), i), "expected [x, y]");
    pts.emplace_back(p[0].get<double>() * unit, p[1].get<double>() * unit);
  }
  const double e = n.number("landmark_e", 0.0) * unit;
  n.reject_unknown();
  try {
    return Track::from_waypoints(std::move(pts), e);
  } catch (const DegenerateTrack& err) {
    throw ValidationError(n.path(), err.what());
  }
}

CaccGains parse_gains(const Node& parent, const std::string& key, EntityKind kind, double unit) {
  CaccGains g = kind == EntityKind::EmulatedPhysical ? CaccGains::miniature() : CaccGains::virtual_vehicle();
  if (!parent.has(key)) return g;
  const json& v = parent.raw(key);
  if (v.is_string()) {
    const std::string preset = v.get<std::string>();
    if (preset == "miniature") return CaccGains::miniature();
    if (preset == "virtual") return CaccGains::virtual_vehicle();
    throw ValidationError(parent.at(key), "expected 'miniature', 'virtual' or an object");
  }
  const Node n = parent.child(key);
  g.k_p = n.number("k_p", g.k_p);
  g.k_v1 = n.number("k_v1", g.k_v1);
  g.k_v2 = n.number("k_v2", g.k_v2);
  g.d_des = n.has("d_des") ? n.number("d_des") * unit : g.d_des;
  n.reject_unknown();
  const std::pair<const char*, double> fields[] = {{"k_p", g.k_p}, {"k_v1", g.k_v1}, {"k_v2", g.k_v2}, {"d_des", g.d_des}};
  for (const auto& [k, val] : fields)
    if (!(val > 0.0)) throw ValidationError(n.at(k), "must be > 0");
  return g;
}

void apply_params(const Node& n, VehicleParams& p, double unit) {
  if (n.has("wheelbase")) p.wheelbase = n.number("wheelbase") * unit;
  if (n.has("v_max")) p.v_max = n.number("v_max") * unit;
  if (n.has("steer_max_deg")) p.steer_max = n.number("steer_max_deg") * EIGEN_PI / 180.0;
  if (n.has("tau_v")) p.tau_v = n.number("tau_v");
  if (n.has("tau_phi")) p.tau_phi = n.number("tau_phi");
  if (n.has("noise_sigma_v")) p.noise_sigma_v = n.number("noise_sigma_v") * unit;
  if (n.has("accel_max")) p.accel_max = n.number("accel_max") * unit;
  n.reject_unknown();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(n.path(), e.what());
  }
}

HdvScript parse_script(const Node& n, const HeadProfile& head, double d_des, double warmup, double unit) {
  HdvScript s;
  s.amplitude = 1.5 * head.amplitude;
  s.period = head.period;
  s.cycles = head.cycles;
  s.d_des = d_des;
  s.arm_time = warmup;
  if (n.has("amplitude")) s.amplitude = n.number("amplitude") * unit;
  s.period = n.number("period", s.period);
  if (n.has("cycles")) s.cycles = static_cast<int>(n.integer("cycles"));
  if (n.has("jitter_sigma")) s.jitter_sigma = n.number("jitter_sigma") * unit;
  s.k_gap = n.number("k_gap", s.k_gap);
  n.reject_unknown();
  if (!(s.period > 0.0)) throw ValidationError(n.at("period"), "must be > 0");
  if (s.cycles < 0) throw ValidationError(n.at("cycles"), "must be >= 0");
  if (s.amplitude < 0.0) throw ValidationError(n.at("amplitude"), "must be >= 0");
  if (s.jitter_sigma < 0.0) throw ValidationError(n.at("jitter_sigma"), "must be >= 0");
  if (!(s.k_gap > 0.0)) throw ValidationError(n.at("k_gap"), "must be > 0");
  return s;
}

ScenarioEvent parse_event(const Node& n, double unit) {
  ScenarioEvent e;
  e.t = n.number("t");
  if (e.t < 0.0) throw ValidationError(n.at("t"), "must be >= 0");
  const std::string type = n.string("type");
  if (type == "obstacle") {
    wire::Obstacle o{n.number("x") * unit, n.number("y") * unit, n.number("r") * unit};
    if (!(o.r >= 0.0)) throw ValidationError(n.at("r"), "must be >= 0");
    e.msg = o;
  } else if (type == "perturb") {
    e.msg = wire::Perturb{n.string("id"), n.number("dv") * unit};
  } else if (type == "facility") {
    wire::Facility f{n.string("id"), n.string("state")};
    if (!wire::is_valid_facility_state(f.state)) throw ValidationError(n.at("state"), "invalid facility state");
    e.msg = f;
  } else {
    throw ValidationError(n.at("type"), "expected 'obstacle', 'perturb' or 'facility'");
  }
  n.reject_unknown();
  return e;
}

}  // namespace

std::string Scenario::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(source_text)));
  return buf;
}

std::size_t Scenario::physics_steps_per_control() const {
  return static_cast<std::size_t>(std::llround(control_dt / physics_dt));
}

std::size_t Scenario::control_offset_steps() const {
  return static_cast<std::size_t>(std::llround(control_offset / physics_dt));
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw ValidationError("duration", "must be > 0");
  if (!(physics_dt > 0.0 && physics_dt <= kMaxTimestep)) throw ValidationError("physics_dt", "must lie in (0, 0.1]");
  const double ratio = control_dt / physics_dt;
  if (!(control_dt > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
    throw ValidationError("control_dt", "must be a positive multiple of physics_dt");
  const double off = control_offset / physics_dt;
  if (control_offset < 0.0 || control_offset >= control_dt || std::abs(off - std::round(off)) > 1e-9)
    throw ValidationError("control_offset", "must be a multiple of physics_dt in [0, control_dt)");
  if (warmup < 0.0) throw ValidationError("warmup", "must be >= 0");
  if (!(metrics_tail >= 0.0)) throw ValidationError("metrics_tail", "must be >= 0");
  try {
    head.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("head", e.what());
  }
  try {
    localization.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("localization", e.what());
  }
  if (vehicles.empty()) throw ValidationError("vehicles", "at least one vehicle is required");

  std::set<std::string> ids;
  int heads = 0;
  double total_gap = 0.0;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const auto& v = vehicles[i];
    const std::string p = index_path("vehicles", i);
    if (v.spec.id.empty()) throw ValidationError(p + ".id", "must not be empty");
    if (!ids.insert(v.spec.id).second) throw ValidationError(p + ".id", "duplicate id '" + v.spec.id + "'");
    if (v.spec.kind == EntityKind::Console) throw ValidationError(p + ".kind", "consoles are not platoon members");
    if (v.spec.controller == ControllerKind::Head) ++heads;
    if (v.spec.controller == ControllerKind::Head && i != 0)
      throw ValidationError(p + ".controller", "the head vehicle must be first");
    if (v.spec.kind == EntityKind::Hdv && !v.script)
      throw ValidationError(p + ".script", "an HDV needs a driver script");
    if (v.spec.controller == ControllerKind::Human && v.spec.kind != EntityKind::Hdv)
      throw ValidationError(p + ".controller", "only an HDV takes human commands");
    if (!(v.initial_s >= 0.0 && v.initial_s < track.lap_length()))
      throw ValidationError(p + ".s", "must lie in [0, lap_length)");
    if (i > 0) total_gap += signed_gap(track, v.initial_s, vehicles[i - 1].initial_s);
  }
  if (heads != 1) throw ValidationError("vehicles", "exactly one vehicle must use the head controller");
  if (vehicles.size() > 1 && total_gap >= track.lap_length())
    throw ValidationError("vehicles", "initial arc-lengths must strictly decrease along the platoon within one lap");
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (const auto* p = std::get_if<wire::Perturb>(&events[i].msg); p && !ids.count(p->id))
      throw ValidationError(index_path("events", i) + ".id", "unknown vehicle '" + p->id + "'");
  }
}

Scenario parse_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("$", std::string("invalid JSON: ") + e.what());
  }
  const Node root(doc, "");
  Scenario sc;
  sc.source_text = doc.dump();

  const std::string units = root.string("units", "full");
  if (units != "full" && units != "mini") throw ValidationError("units", "expected 'full' or 'mini'");
  const double unit = units == "mini" ? kMiniatureScale : 1.0;

  sc.name = root.string("name", sc.name);
  if (root.has("seed")) {
    const auto seed = root.integer("seed");
    if (seed < 0) throw ValidationError("seed", "must be >= 0");
    sc.seed = static_cast<std::uint64_t>(seed);
  }
  sc.duration = root.number("duration", sc.duration);
  const std::string mode = root.string("mode", "lockstep");
  if (mode == "lockstep") sc.mode = RunMode::Lockstep;
  else if (mode == "realtime") sc.mode = RunMode::Realtime;
  else throw ValidationError("mode", "expected 'lockstep' or 'realtime'");
  sc.physics_dt = root.number("physics_dt", sc.physics_dt);
  sc.control_dt = root.number("control_dt", sc.control_dt);
  sc.control_offset = root.number("control_offset", sc.control_offset);
  sc.warmup = root.number("warmup", sc.warmup);
  sc.metrics_tail = root.number("metrics_tail", sc.metrics_tail);

  if (root.has("track")) sc.track = parse_track(root.child("track"), unit);

  sc.head.trigger_arclength = sc.track.landmark_e();
  if (root.has("head")) {
    const Node h = root.child("head");
    if (h.has("base_speed")) sc.head.base_speed = h.number("base_speed") * unit;
    if (h.has("amplitude")) sc.head.amplitude = h.number("amplitude") * unit;
    sc.head.period = h.number("period", sc.head.period);
    if (h.has("cycles")) sc.head.cycles = static_cast<int>(h.integer("cycles"));
    if (h.has("trigger_arclength")) sc.head.trigger_arclength = h.number("trigger_arclength") * unit;
    h.reject_unknown();
  }

  for (LinkId id : kAllLinks) sc.links[id] = LinkModel::measured(id);
  if (root.has("links")) {
    const Node l = root.child("links");
    const std::string preset = l.string("preset", "measured");
    if (preset == "zero") {
      for (LinkId id : kAllLinks) sc.links[id] = LinkModel::zero(id);
    } else if (preset != "measured") {
      throw ValidationError(l.at("preset"), "expected 'measured' or 'zero'");
    }
    for (const auto& [name, value] : l.all().items()) {
      if (name == "preset") continue;
      const std::string path = l.at(name);
      const LinkId id = parse_link(name, path);
      const Node m(value, path);
      const double mean = m.number("mean"), sd = m.number("std"), p99 = m.number("p99");
      m.reject_unknown();
      if (mean < 0.0 || sd < 0.0 || p99 < 0.0) throw ValidationError(path, "delay parameters must be >= 0");
      sc.links[id] = LinkModel(id, mean, sd, p99);
    }
  }

  if (root.has("localization")) {
    const Node l = root.child("localization");
    const std::string preset = l.string("preset", "measured");
    if (preset == "noiseless") sc.localization = LocalizationModel::noiseless();
    else if (preset != "measured") throw ValidationError(l.at("preset"), "expected 'measured' or 'noiseless'");
    auto& m = sc.localization;
    m.noise_mean_x = l.number("noise_mean_x", m.noise_mean_x);
    m.noise_std_x = l.number("noise_std_x", m.noise_std_x);
    m.noise_mean_y = l.number("noise_mean_y", m.noise_mean_y);
    m.noise_std_y = l.number("noise_std_y", m.noise_std_y);
    m.heading_noise_std = l.number("heading_noise_std", m.heading_noise_std);
    m.frame_rate = l.number("frame_rate", m.frame_rate);
    m.processing_delay_mean = l.number("processing_delay_mean", m.processing_delay_mean);
    m.processing_delay_std = l.number("processing_delay_std", m.processing_delay_std);
    l.reject_unknown();
  }

  VehicleParams physical = VehicleParams::emulated_physical();
  VehicleParams virtual_params = VehicleParams::virtual_vehicle();
  if (root.has("vehicle_params")) {
    const Node vp = root.child("vehicle_params");
    if (vp.has("physical")) apply_params(vp.child("physical"), physical, unit);
    if (vp.has("virtual")) apply_params(vp.child("virtual"), virtual_params, unit);
    vp.reject_unknown();
  }

  if (root.has("preview")) {
    const Node p = root.child("preview");
    if (p.has("lookahead_min")) sc.preview.lookahead_min = p.number("lookahead_min") * unit;
    sc.preview.lookahead_gain = p.number("lookahead_gain", sc.preview.lookahead_gain);
    if (p.has("max_lateral")) sc.preview.max_lateral = p.number("max_lateral") * unit;
    p.reject_unknown();
    if (!(sc.preview.lookahead_min > 0.0)) throw ValidationError(p.at("lookahead_min"), "must be > 0");
    if (sc.preview.lookahead_gain < 0.0) throw ValidationError(p.at("lookahead_gain"), "must be >= 0");
    if (!(sc.preview.max_lateral > 0.0)) throw ValidationError(p.at("max_lateral"), "must be > 0");
  }

  const json& vehicles = root.array("vehicles");
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const Node v(vehicles[i], index_path("vehicles", i));
    ScenarioVehicle sv;
    sv.spec.id = v.string("id");
    try {
      sv.spec.kind = parse_entity_kind(v.string("kind"));
    } catch (const std::invalid_argument&) {
      throw ValidationError(v.at("kind"), "expected 'physical', 'virtual' or 'hdv'");
    }
    const std::string ctrl = v.string("controller", i == 0 ? "head" : sv.spec.kind == EntityKind::Hdv ? "human" : "cacc");
    if (ctrl == "head") sv.spec.controller = ControllerKind::Head;
    else if (ctrl == "cacc") sv.spec.controller = ControllerKind::Cacc;
    else if (ctrl == "human") sv.spec.controller = ControllerKind::Human;
    else throw ValidationError(v.at("controller"), "expected 'head', 'cacc' or 'human'");
    sv.spec.gains = parse_gains(v, "gains", sv.spec.kind, unit);
    sv.spec.lane_keep = v.boolean("lane_keep", true);
    sv.params = sv.spec.kind == EntityKind::EmulatedPhysical ? physical : virtual_params;
    if (v.has("s")) {
      sv.initial_s = v.number("s") * unit;
    } else if (i == 0) {
      sv.initial_s = sc.track.wrap(sc.track.landmark_e() - kHeadSpawnBeforeE);
    } else {
      sv.initial_s = sc.track.wrap(sc.vehicles.back().initial_s - sv.spec.gains.d_des);
    }
    if (sv.spec.kind == EntityKind::Hdv) {
      const json empty = json::object();
      const Node script = v.has("script") ? v.child("script") : Node(empty, v.at("script"));
      sv.script = parse_script(script, sc.head, sv.spec.gains.d_des, sc.warmup, unit);
    } else if (v.has("script")) {
      throw ValidationError(v.at("script"), "only an HDV takes a driver script");
    }
    v.reject_unknown();
    sc.vehicles.push_back(std::move(sv));
  }

  if (root.has("events")) {
    const json& events = root.array("events");
    for (std::size_t i = 0; i < events.size(); ++i)
      sc.events.push_back(parse_event(Node(events[i], index_path("events", i)), unit));
    std::stable_sort(sc.events.begin(), sc.events.end(),
                     [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t < b.t; });
  }
  root.reject_unknown();

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace mcct
