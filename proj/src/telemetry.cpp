#include "mcct/telemetry.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace mcct {

namespace {

using ojson = nlohmann::ordered_json;

ojson header_json(const TelemetryHeader& h) {
  ojson j;
  j["type"] = "header";
  j["format"] = "mcct-telemetry";
  j["version"] = 1;
  j["scenario"] = h.scenario;
  j["scenario_hash"] = h.scenario_hash;
  j["seed"] = h.seed;
  j["lap_length"] = h.lap_length;
  j["physics_dt"] = h.physics_dt;
  j["control_dt"] = h.control_dt;
  j["head"] = {{"base_speed", h.base_speed}, {"amplitude", h.amplitude}, {"period", h.period}, {"cycles", h.cycles}};
  j["metrics_tail"] = h.metrics_tail;
  j["vehicles"] = ojson::array();
  for (const auto& v : h.vehicles)
    j["vehicles"].push_back({{"id", v.id}, {"kind", v.kind}, {"controller", v.controller}, {"d_des", v.d_des}});
  return j;
}

ojson row_json(const TelemetryRow& r) {
  ojson j;
  j["type"] = "row";
  j["t"] = r.t;
  j["id"] = r.id;
  j["s"] = r.s;
  j["x"] = r.x;
  j["y"] = r.y;
  j["theta"] = r.theta;
  j["v"] = r.v;
  j["v_cmd"] = r.v_cmd;
  j["phi_cmd"] = r.phi_cmd;
  j["gap"] = r.gap;
  if (r.ft) {
    j["ft"] = *r.ft;
    j["fx"] = *r.fx;
    j["fy"] = *r.fy;
    j["ftheta"] = *r.ftheta;
    j["fv"] = *r.fv;
  }
  return j;
}

ojson event_json(const CoordinatorEvent& e, const TelemetryHeader& h) {
  ojson j;
  j["type"] = "event";
  j["t"] = e.t;
  j["event"] = e.type;
  if (e.type == "trigger") {
    j["id"] = e.id;
    j["period"] = h.period;
    j["cycles"] = h.cycles;
  } else if (e.type == "obstacle") {
    j["x"] = e.x;
    j["y"] = e.y;
    j["r"] = e.r;
  } else if (e.type == "perturb") {
    j["id"] = e.id;
    j["dv"] = e.dv;
  } else if (e.type == "facility") {
    j["id"] = e.id;
    j["state"] = e.state;
  }
  return j;
}

template <typename T>
T get(const ojson& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw MalformedRecord(std::string("missing field '") + key + "'", line);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw MalformedRecord(std::string("field '") + key + "' has the wrong type", line);
  }
}

double num(const ojson& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw MalformedRecord(std::string("field '") + key + "' is missing or not a number", line);
  return it->get<double>();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string to_jsonl(const Telemetry& t) {
  std::string out = header_json(t.header).dump();
  out.push_back('\n');
  std::size_t e = 0;
  for (const auto& r : t.rows) {
    while (e < t.events.size() && t.events[e].t < r.t) out += event_json(t.events[e++], t.header).dump() + "\n";
    out += row_json(r).dump() + "\n";
  }
  while (e < t.events.size()) out += event_json(t.events[e++], t.header).dump() + "\n";
  return out;
}

std::string to_csv(const Telemetry& t) {
  std::ostringstream out;
  out.precision(17);
  out << "t,id,s,x,y,theta,v,v_cmd,phi_cmd,gap,ft,fx,fy,ftheta,fv\n";
  for (const auto& r : t.rows) {
    out << r.t << ',' << r.id << ',' << r.s << ',' << r.x << ',' << r.y << ',' << r.theta << ',' << r.v << ','
        << r.v_cmd << ',' << r.phi_cmd << ',' << r.gap;
    if (r.ft) out << ',' << *r.ft << ',' << *r.fx << ',' << *r.fy << ',' << *r.ftheta << ',' << *r.fv;
    else out << ",,,,,";
    out << '\n';
  }
  return out.str();
}

Telemetry parse_telemetry(const std::string& jsonl) {
  Telemetry t;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(e.what(), n);
    }
    if (!j.is_object()) throw MalformedRecord("record is not an object", n);
    const std::string type = get<std::string>(j, "type", n);
    if (type == "header") {
      if (have_header) throw MalformedRecord("second header", n);
      have_header = true;
      auto& h = t.header;
      h.scenario = get<std::string>(j, "scenario", n);
      h.scenario_hash = get<std::string>(j, "scenario_hash", n);
      h.seed = get<std::uint64_t>(j, "seed", n);
      h.lap_length = num(j, "lap_length", n);
      h.physics_dt = num(j, "physics_dt", n);
      h.control_dt = num(j, "control_dt", n);
      const ojson head = get<ojson>(j, "head", n);
      h.base_speed = num(head, "base_speed", n);
      h.amplitude = num(head, "amplitude", n);
      h.period = num(head, "period", n);
      h.cycles = get<int>(head, "cycles", n);
      h.metrics_tail = num(j, "metrics_tail", n);
      for (const auto& v : get<ojson>(j, "vehicles", n))
        h.vehicles.push_back({get<std::string>(v, "id", n), get<std::string>(v, "kind", n),
                              get<std::string>(v, "controller", n), num(v, "d_des", n)});
      continue;
    }
    if (!have_header) throw MalformedRecord("record before header", n);
    if (type == "row") {
      TelemetryRow r;
      r.t = num(j, "t", n);
      r.id = get<std::string>(j, "id", n);
      r.s = num(j, "s", n);
      r.x = num(j, "x", n);
      r.y = num(j, "y", n);
      r.theta = num(j, "theta", n);
      r.v = num(j, "v", n);
      r.v_cmd = num(j, "v_cmd", n);
      r.phi_cmd = num(j, "phi_cmd", n);
      r.gap = num(j, "gap", n);
      if (j.contains("ft")) {
        r.ft = num(j, "ft", n);
        r.fx = num(j, "fx", n);
        r.fy = num(j, "fy", n);
        r.ftheta = num(j, "ftheta", n);
        r.fv = num(j, "fv", n);
      }
      if (!t.rows.empty()) {
        const auto& prev = t.rows.back();
        if (r.t < prev.t || (r.t == prev.t && r.id <= prev.id))
          throw MalformedRecord("rows out of (t, id) order", n);
      }
      t.rows.push_back(std::move(r));
    } else if (type == "event") {
      CoordinatorEvent e;
      e.t = num(j, "t", n);
      e.type = get<std::string>(j, "event", n);
      if (e.type == "trigger") {
        e.id = get<std::string>(j, "id", n);
      } else if (e.type == "obstacle") {
        e.x = num(j, "x", n);
        e.y = num(j, "y", n);
        e.r = num(j, "r", n);
      } else if (e.type == "perturb") {
        e.id = get<std::string>(j, "id", n);
        e.dv = num(j, "dv", n);
      } else if (e.type == "facility") {
        e.id = get<std::string>(j, "id", n);
        e.state = get<std::string>(j, "state", n);
      } else {
        throw MalformedRecord("unknown event '" + e.type + "'", n);
      }
      t.events.push_back(std::move(e));
    } else {
      throw MalformedRecord("unknown record type '" + type + "'", n);
    }
  }
  if (!have_header) throw MalformedRecord("no header", n);
  return t;
}

Telemetry read_telemetry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open telemetry file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_telemetry(ss.str());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

double attenuation_ratio(double p2p, double p2p_predecessor) {
  if (p2p_predecessor == 0.0) return p2p == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return p2p / p2p_predecessor;
}

MetricsReport compute_metrics(const Telemetry& t, double settle_band) {
  const auto trig = std::find_if(t.events.begin(), t.events.end(),
                                 [](const CoordinatorEvent& e) { return e.type == "trigger"; });
  if (trig == t.events.end()) throw WindowNotFound("telemetry has no perturbation trigger event");

  MetricsReport m;
  const auto& h = t.header;
  m.t_trigger = trig->t;
  m.window_start = trig->t;
  m.window_end = trig->t + h.cycles * h.period + h.metrics_tail;

  std::map<std::string, std::vector<const TelemetryRow*>> by_id;
  for (const auto& r : t.rows) by_id[r.id].push_back(&r);

  for (std::size_t i = 0; i < h.vehicles.size(); ++i) {
    const auto& spec = h.vehicles[i];
    const auto& rows = by_id[spec.id];
    VehicleMetrics vm;
    vm.id = spec.id;

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    double sq = 0.0;
    std::size_t n_after = 0;
    double last_unsettled = m.t_trigger;
    std::deque<const TelemetryRow*> avg_window;
    double avg_sum = 0.0;
    for (const TelemetryRow* r : rows) {
      if (r->t >= m.window_start && r->t <= m.window_end) {
        lo = std::min(lo, r->v);
        hi = std::max(hi, r->v);
      }
      if (i > 0) {
        if (!(r->gap > 0.0 && r->gap < h.lap_length / 2.0)) m.order_preserved = false;
        if (r->t > m.window_end) {
          sq += (r->gap - spec.d_des) * (r->gap - spec.d_des);
          ++n_after;
        }
      }
      avg_window.push_back(r);
      avg_sum += r->v;
      while (avg_window.front()->t <= r->t - 1.0) {
        avg_sum -= avg_window.front()->v;
        avg_window.pop_front();
      }
      const double avg = avg_sum / static_cast<double>(avg_window.size());
      if (r->t >= m.t_trigger && std::abs(avg - h.base_speed) > settle_band * h.base_speed) last_unsettled = r->t;
    }
    vm.peak_to_peak = hi >= lo ? hi - lo : 0.0;
    vm.settling_time = last_unsettled - m.t_trigger;
    if (i > 0) {
      vm.gap_rms = n_after ? std::sqrt(sq / static_cast<double>(n_after)) : std::nan("");
      vm.gap_rms_ratio = vm.gap_rms / spec.d_des;
      vm.attenuation = attenuation_ratio(vm.peak_to_peak, m.vehicles.back().peak_to_peak);
    } else {
      vm.gap_rms = vm.gap_rms_ratio = std::nan("");
    }
    m.vehicles.push_back(vm);
  }
  return m;
}

std::string format_metrics(const MetricsReport& m) {
  std::ostringstream out;
  out << "trigger t=" << fmt(m.t_trigger) << " s, window [" << fmt(m.window_start) << ", " << fmt(m.window_end)
      << "] s, formation order " << (m.order_preserved ? "preserved" : "CHANGED") << "\n";
  out << "id        p2p[m/s]  atten     gap_rms[m]  gap_rms/d_des  settle[s]\n";
  for (const auto& v : m.vehicles) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-9s %-9s %-9s %-11s %-14s %s\n", v.id.c_str(), fmt(v.peak_to_peak).c_str(),
                  fmt(v.attenuation).c_str(), fmt(v.gap_rms).c_str(), fmt(v.gap_rms_ratio).c_str(),
                  fmt(v.settling_time).c_str());
    out << buf;
  }
  return out.str();
}

std::vector<wire::Snapshot> replay_snapshots(const Telemetry& t) {
  std::vector<wire::Snapshot> out;
  std::map<std::string, const TelemetryRow*> current;
  auto flush = [&](double ft) {
    wire::Snapshot s;
    s.t = ft;
    for (const auto& v : t.header.vehicles) {
      const auto it = current.find(v.id);
      if (it != current.end() && it->second->ft)
        s.vehicles.push_back({v.id, ft, *it->second->fx, *it->second->fy, *it->second->ftheta, *it->second->fv});
    }
    std::map<std::string, std::string> facilities;
    for (const auto& e : t.events) {
      if (e.t > ft) break;
      if (e.type == "obstacle") s.obstacles.push_back({e.x, e.y, e.r});
      if (e.type == "facility") facilities[e.id] = e.state;
    }
    for (const auto& [id, state] : facilities) s.facilities.push_back({id, state});
    out.push_back(std::move(s));
    current.clear();
  };

  // Rows of one control tick are contiguous; a tick without any fused state
  // produces no snapshot.
  for (std::size_t i = 0; i < t.rows.size();) {
    std::size_t j = i;
    const TelemetryRow* fused = nullptr;
    for (; j < t.rows.size() && t.rows[j].t == t.rows[i].t; ++j) {
      current[t.rows[j].id] = &t.rows[j];
      if (t.rows[j].ft) fused = &t.rows[j];
    }
    if (fused) flush(*fused->ft);
    current.clear();
    i = j;
  }
  return out;
}

void replay(const Telemetry& t, double speed, const std::function<void(const wire::Snapshot&)>& sink) {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw InvalidSpeed("replay speed must be > 0");
  const auto snaps = replay_snapshots(t);
  if (snaps.empty()) return;
  const auto start = std::chrono::steady_clock::now();
  const double t0 = snaps.front().t;
  for (const auto& s : snaps) {
    const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double>((s.t - t0) / speed));
    std::this_thread::sleep_until(due);
    sink(s);
  }
}

}  // namespace mcct
