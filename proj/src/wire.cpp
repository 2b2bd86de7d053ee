#include "mcct/wire.hpp"

#include "json.hpp"

#include <array>
#include <cmath>

namespace mcct::wire {

namespace {

using ojson = nlohmann::ordered_json;

struct SchemaError {
  std::string what;
};

double finite(double v, const char* field) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite value for field ") + field);
  return v;
}

ojson state_json(const State& s) {
  ojson j;
  j["type"] = "state";
  j["id"] = s.id;
  j["t"] = finite(s.t, "t");
  j["x"] = finite(s.x, "x");
  j["y"] = finite(s.y, "y");
  j["theta"] = finite(s.theta, "theta");
  j["v"] = finite(s.v, "v");
  return j;
}

ojson obstacle_json(const Obstacle& o) {
  ojson j;
  j["type"] = "obstacle";
  j["x"] = finite(o.x, "x");
  j["y"] = finite(o.y, "y");
  j["r"] = finite(o.r, "r");
  return j;
}

ojson facility_json(const Facility& f) {
  ojson j;
  j["type"] = "facility";
  j["id"] = f.id;
  j["state"] = f.state;
  return j;
}

ojson to_json(const Message& m) {
  return std::visit(
      [](const auto& msg) -> ojson {
        using T = std::decay_t<decltype(msg)>;
        ojson j;
        if constexpr (std::is_same_v<T, Register>) {
          j["type"] = "register";
          j["id"] = msg.id;
          j["kind"] = msg.kind;
          j["frame"] = msg.frame;
        } else if constexpr (std::is_same_v<T, State>) {
          j = state_json(msg);
        } else if constexpr (std::is_same_v<T, Obs>) {
          j["type"] = "obs";
          j["id"] = msg.id;
          j["t_cap"] = finite(msg.t_cap, "t_cap");
          j["x"] = finite(msg.x, "x");
          j["y"] = finite(msg.y, "y");
          j["theta"] = finite(msg.theta, "theta");
        } else if constexpr (std::is_same_v<T, Cmd>) {
          j["type"] = "cmd";
          j["id"] = msg.id;
          j["t"] = finite(msg.t, "t");
          j["v_cmd"] = finite(msg.v_cmd, "v_cmd");
          j["phi_cmd"] = finite(msg.phi_cmd, "phi_cmd");
        } else if constexpr (std::is_same_v<T, Obstacle>) {
          j = obstacle_json(msg);
        } else if constexpr (std::is_same_v<T, Perturb>) {
          j["type"] = "perturb";
          j["id"] = msg.id;
          j["dv"] = finite(msg.dv, "dv");
        } else if constexpr (std::is_same_v<T, Facility>) {
          j = facility_json(msg);
        } else if constexpr (std::is_same_v<T, Tick>) {
          j["type"] = "tick";
          j["t"] = finite(msg.t, "t");
          j["step"] = msg.step;
        } else if constexpr (std::is_same_v<T, TickAck>) {
          j["type"] = "tick_ack";
          j["step"] = msg.step;
          j["id"] = msg.id;
        } else if constexpr (std::is_same_v<T, Snapshot>) {
          j["type"] = "snapshot";
          j["t"] = finite(msg.t, "t");
          j["vehicles"] = ojson::array();
          for (const auto& v : msg.vehicles) j["vehicles"].push_back(state_json(v));
          j["obstacles"] = ojson::array();
          for (const auto& o : msg.obstacles) j["obstacles"].push_back(obstacle_json(o));
          j["facilities"] = ojson::array();
          for (const auto& f : msg.facilities) j["facilities"].push_back(facility_json(f));
        }
        return j;
      },
      m);
}

const ojson& field(const ojson& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError{std::string("missing field '") + name + "'"};
  return *it;
}

double num(const ojson& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) throw SchemaError{std::string("field '") + name + "' is not a number"};
  return v.get<double>();
}

std::int64_t integer(const ojson& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) throw SchemaError{std::string("field '") + name + "' is not an integer"};
  return v.get<std::int64_t>();
}

std::string str(const ojson& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw SchemaError{std::string("field '") + name + "' is not a string"};
  return v.get<std::string>();
}

void expect_type(const ojson& j, const char* type) {
  if (str(j, "type") != type) throw SchemaError{std::string("expected element of type '") + type + "'"};
}

State state_from(const ojson& j) {
  return {str(j, "id"), num(j, "t"), num(j, "x"), num(j, "y"), num(j, "theta"), num(j, "v")};
}

Obstacle obstacle_from(const ojson& j) { return {num(j, "x"), num(j, "y"), num(j, "r")}; }

Facility facility_from(const ojson& j) {
  Facility f{str(j, "id"), str(j, "state")};
  if (!is_valid_facility_state(f.state)) throw SchemaError{"invalid facility state '" + f.state + "'"};
  return f;
}

const ojson& array_field(const ojson& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_array()) throw SchemaError{std::string("field '") + name + "' is not an array"};
  return v;
}

Message from_json(const ojson& j) {
  if (!j.is_object()) throw SchemaError{"frame is not a JSON object"};
  const std::string type = str(j, "type");
  if (type == "register") {
    Register r{str(j, "id"), str(j, "kind"), str(j, "frame")};
    if (!is_valid_kind(r.kind)) throw SchemaError{"invalid kind '" + r.kind + "'"};
    if (r.frame != "mini" && r.frame != "full") throw SchemaError{"invalid frame '" + r.frame + "'"};
    return r;
  }
  if (type == "state") return state_from(j);
  if (type == "obs") return Obs{str(j, "id"), num(j, "t_cap"), num(j, "x"), num(j, "y"), num(j, "theta")};
  if (type == "cmd") return Cmd{str(j, "id"), num(j, "t"), num(j, "v_cmd"), num(j, "phi_cmd")};
  if (type == "obstacle") return obstacle_from(j);
  if (type == "perturb") return Perturb{str(j, "id"), num(j, "dv")};
  if (type == "facility") return facility_from(j);
  if (type == "tick") return Tick{num(j, "t"), integer(j, "step")};
  if (type == "tick_ack") return TickAck{integer(j, "step"), str(j, "id")};
  if (type == "snapshot") {
    Snapshot s;
    s.t = num(j, "t");
    for (const auto& v : array_field(j, "vehicles")) {
      expect_type(v, "state");
      s.vehicles.push_back(state_from(v));
    }
    for (const auto& o : array_field(j, "obstacles")) {
      expect_type(o, "obstacle");
      s.obstacles.push_back(obstacle_from(o));
    }
    if (j.contains("facilities")) {
      for (const auto& f : array_field(j, "facilities")) {
        expect_type(f, "facility");
        s.facilities.push_back(facility_from(f));
      }
    }
    return s;
  }
  throw SchemaError{"unknown message type '" + type + "'"};
}

}  // namespace

bool is_valid_facility_state(std::string_view s) {
  static constexpr std::array<std::string_view, 7> kStates{"on", "off", "red", "yellow", "green", "up", "down"};
  for (auto k : kStates)
    if (k == s) return true;
  return false;
}

bool is_valid_kind(std::string_view s) {
  return s == "virtual" || s == "physical" || s == "hdv" || s == "console";
}

std::string encode(const Message& m) {
  std::string out = to_json(m).dump();
  out.push_back('\n');
  return out;
}

Message decode(std::string_view frame) {
  if (frame.empty() || frame.back() != '\n') throw MalformedFrame("incomplete frame (no terminating newline)", frame.size());
  const std::string_view body = frame.substr(0, frame.size() - 1);
  if (const auto nl = body.find('\n'); nl != std::string_view::npos)
    throw MalformedFrame("more than one line in frame", nl);
  ojson j;
  try {
    j = ojson::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedFrame(e.what(), e.byte == 0 ? 0 : e.byte - 1);
  }
  try {
    return from_json(j);
  } catch (const SchemaError& e) {
    throw MalformedFrame(e.what, 0);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFrame(e.what(), 0);
  }
}

std::string_view type_name(const Message& m) {
  static constexpr std::array<std::string_view, 10> kNames{"register", "state",    "obs",  "cmd",      "obstacle",
                                                           "perturb",  "facility", "tick", "tick_ack", "snapshot"};
  return kNames[m.index()];
}

}  // namespace mcct::wire
