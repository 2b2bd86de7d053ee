#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mcct::wire {

// Every coordinate on the wire is full-scale meters.

struct Register {
  std::string id;
  std::string kind;   // virtual | physical | hdv | console
  std::string frame;  // mini | full
  bool operator==(const Register&) const = default;
};

struct State {
  std::string id;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  bool operator==(const State&) const = default;
};

struct Obs {
  std::string id;
  double t_cap = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  bool operator==(const Obs&) const = default;
};

struct Cmd {
  std::string id;
  double t = 0.0;
  double v_cmd = 0.0;
  double phi_cmd = 0.0;
  bool operator==(const Cmd&) const = default;
};

struct Obstacle {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
  bool operator==(const Obstacle&) const = default;
};

struct Perturb {
  std::string id;
  double dv = 0.0;
  bool operator==(const Perturb&) const = default;
};

struct Facility {
  std::string id;
  std::string state;  // on | off | red | yellow | green | up | down
  bool operator==(const Facility&) const = default;
};

struct Tick {
  double t = 0.0;
  std::int64_t step = 0;
  bool operator==(const Tick&) const = default;
};

struct TickAck {
  std::int64_t step = 0;
  std::string id;
  bool operator==(const TickAck&) const = default;
};

struct Snapshot {
  double t = 0.0;
  std::vector<State> vehicles;
  std::vector<Obstacle> obstacles;
  std::vector<Facility> facilities;
  bool operator==(const Snapshot&) const = default;
};

using Message = std::variant<Register, State, Obs, Cmd, Obstacle, Perturb, Facility, Tick, TickAck, Snapshot>;

class MalformedFrame : public std::runtime_error {
 public:
  MalformedFrame(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " at byte " + std::to_string(byte_offset)), offset_(byte_offset) {}
  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_;
};

bool is_valid_facility_state(std::string_view s);
bool is_valid_kind(std::string_view s);

/// One JSON object terminated by '\n'. Throws std::invalid_argument for
/// non-finite numbers, which JSON cannot carry.
std::string encode(const Message& m);

/// Decodes exactly one frame; the trailing '\n' is required.
Message decode(std::string_view frame);

/// Wire "type" tag of a message.
std::string_view type_name(const Message& m);

}  // namespace mcct::wire
