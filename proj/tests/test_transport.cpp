#include "mcct/transport.hpp"
#include "presets.hpp"

#include <doctest.h>

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

using namespace mcct;
using namespace mcct::testing;
using nlohmann::json;

namespace {

std::string temp_port_file(const std::string& tag) {
  const auto p = std::filesystem::temp_directory_path() /
                 ("mcct-port-" + tag + "-" + std::to_string(::getpid()) + ".txt");
  std::filesystem::remove(p);
  return p.string();
}

std::uint16_t wait_for_port(const std::string& path) {
  for (int i = 0; i < 200; ++i) {
    std::ifstream in(path);
    int port = 0;
    if (in >> port && port > 0) return static_cast<std::uint16_t>(port);
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  throw std::runtime_error("coordinator did not publish its port");
}

Scenario zero_delay(double duration) {
  json j = preset_json("experiment_a.json");
  j["duration"] = duration;
  j["links"] = {{"preset", "zero"}};
  return scenario_from(j);
}

std::string agent_kind(const ScenarioVehicle& v) {
  if (v.spec.kind == EntityKind::Hdv) return "hdv-script";
  return entity_kind_name(v.spec.kind);
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("endpoint parsing") {
    CHECK(parse_endpoint("127.0.0.1:7400") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 7400});
    CHECK(parse_endpoint("localhost:0").second == 0);
    CHECK_THROWS_AS(parse_endpoint("127.0.0.1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint("host:99999"), std::invalid_argument);
    CHECK_THROWS_AS(parse_endpoint("host:abc"), std::invalid_argument);
  }

  TEST_CASE("frames survive the socket in order") {
    TcpListener listener("127.0.0.1", 0);
    REQUIRE(listener.port() != 0);
    auto sender = std::async(std::launch::async, [&] {
      auto s = connect_tcp("127.0.0.1", listener.port(), 5.0);
      for (int i = 0; i < 1000; ++i) s->write(wire::encode(wire::Tick{i * 0.01, i}));
    });
    auto conn = listener.accept(5000);
    REQUIRE(conn);
    for (int i = 0; i < 1000; ++i) {
      const auto line = conn->read_line();
      REQUIRE(line);
      CHECK(wire::decode(*line) == wire::Message{wire::Tick{i * 0.01, i}});
    }
    sender.get();
    CHECK_FALSE(conn->read_line().has_value());
  }

  TEST_CASE("writing to a closed peer is reported as PeerClosed") {
    TcpListener listener("127.0.0.1", 0);
    auto client = connect_tcp("127.0.0.1", listener.port(), 5.0);
    listener.accept(5000).reset();
    const std::string frame = wire::encode(wire::Tick{0.0, 0});
    bool closed = false;
    for (int i = 0; i < 10000 && !closed; ++i) {
      try {
        client->write(frame);
      } catch (const PeerClosed&) {
        closed = true;
      }
    }
    CHECK(closed);
  }

  TEST_CASE("an unreachable coordinator is reported") {
    std::uint16_t port;
    {
      TcpListener l("127.0.0.1", 0);
      port = l.port();
    }
    CHECK_THROWS_AS(connect_tcp("127.0.0.1", port, 0.2), NetworkError);
  }

  TEST_CASE("coordinator plus agent threads reproduce the in-process run") {
    const Scenario sc = zero_delay(12.0);
    ServeOptions opt;
    opt.listen = "127.0.0.1:0";
    opt.port_file = temp_port_file("lockstep");
    auto served = std::async(std::launch::async, [&] { return serve(sc, opt); });
    const std::uint16_t port = wait_for_port(opt.port_file);
    std::vector<std::future<void>> agents;
    for (const auto& v : sc.vehicles) {
      AgentOptions a;
      a.connect = "127.0.0.1:" + std::to_string(port);
      a.id = v.spec.id;
      a.kind = agent_kind(v);
      agents.push_back(std::async(std::launch::async, [&sc, a] { run_agent(sc, a); }));
    }
    const RunResult remote = served.get();
    for (auto& a : agents) a.get();
    const RunResult local = run_scenario(sc);
    CHECK(to_jsonl(remote.telemetry) == to_jsonl(local.telemetry));
    std::filesystem::remove(opt.port_file);
  }

  TEST_CASE("a console sees snapshots and can perturb a vehicle") {
    json j = preset_json("experiment_b.json");
    j["duration"] = 6.0;
    j["mode"] = "realtime";
    const Scenario sc = scenario_from(j);
    ServeOptions opt;
    opt.listen = "127.0.0.1:0";
    opt.port_file = temp_port_file("console");
    opt.realtime_speed = 4.0;
    auto served = std::async(std::launch::async, [&] { return serve(sc, opt); });
    const std::uint16_t port = wait_for_port(opt.port_file);

    auto console = connect_tcp("127.0.0.1", port, 5.0);
    console->write(wire::encode(wire::Register{"hmi", "console", "full"}));
    std::this_thread::sleep_for(std::chrono::milliseconds(50));

    std::vector<std::future<void>> agents;
    for (const auto& v : sc.vehicles) {
      AgentOptions a;
      a.connect = "127.0.0.1:" + std::to_string(port);
      a.id = v.spec.id;
      a.kind = agent_kind(v);
      agents.push_back(std::async(std::launch::async, [&sc, a] { run_agent(sc, a); }));
    }

    std::vector<wire::Snapshot> seen;
    bool perturbed = false;
    while (auto line = console->read_line()) {
      const wire::Message m = wire::decode(*line);
      if (const auto* s = std::get_if<wire::Snapshot>(&m)) {
        seen.push_back(*s);
        if (!perturbed && s->t > 2.0) {
          console->write(wire::encode(wire::Perturb{"5", 0.5}));
          perturbed = true;
        }
      }
    }
    const RunResult r = served.get();
    for (auto& a : agents) a.get();

    REQUIRE(seen.size() > 80);
    CHECK(seen.back().vehicles.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(seen.back().vehicles[i].id == std::to_string(i + 1));
    bool applied = false;
    for (const auto& e : r.telemetry.events)
      if (e.type == "perturb" && e.id == "5" && e.dv == 0.5) applied = true;
    CHECK(applied);
    std::filesystem::remove(opt.port_file);
  }

  TEST_CASE("registrations that do not fit the scenario are refused") {
    const Scenario sc = zero_delay(1.0);
    ServeOptions opt;
    opt.listen = "127.0.0.1:0";
    opt.port_file = temp_port_file("reject");
    opt.register_timeout = 3.0;
    auto served = std::async(std::launch::async, [&] {
      try {
        serve(sc, opt);
      } catch (const NetworkError&) {
      }
    });
    const std::uint16_t port = wait_for_port(opt.port_file);
    auto wrong_kind = connect_tcp("127.0.0.1", port, 5.0);
    wrong_kind->write(wire::encode(wire::Register{"1", "virtual", "full"}));
    CHECK_FALSE(wrong_kind->read_line().has_value());

    auto unknown = connect_tcp("127.0.0.1", port, 5.0);
    unknown->write(wire::encode(wire::Register{"42", "virtual", "full"}));
    CHECK_FALSE(unknown->read_line().has_value());

    auto no_register = connect_tcp("127.0.0.1", port, 5.0);
    no_register->write(wire::encode(wire::Tick{0.0, 0}));
    CHECK_FALSE(no_register->read_line().has_value());

    auto first = connect_tcp("127.0.0.1", port, 5.0);
    first->write(wire::encode(wire::Register{"4", "virtual", "full"}));
    const auto reply = first->read_line();
    REQUIRE(reply);
    const wire::Message m = wire::decode(*reply);
    REQUIRE(std::holds_alternative<wire::State>(m));
    const Pose2D p0 = sc.track.pose_at(sc.vehicles[3].initial_s);
    CHECK(std::get<wire::State>(m).x == doctest::Approx(p0.x));
    auto second = connect_tcp("127.0.0.1", port, 5.0);
    second->write(wire::encode(wire::Register{"4", "virtual", "full"}));
    CHECK_FALSE(second->read_line().has_value());
    served.get();
    std::filesystem::remove(opt.port_file);
  }

  TEST_CASE("the coordinator gives up when agents never arrive") {
    const Scenario sc = zero_delay(1.0);
    ServeOptions opt;
    opt.listen = "127.0.0.1:0";
    opt.register_timeout = 0.3;
    CHECK_THROWS_AS(serve(sc, opt), NetworkError);
  }

  TEST_CASE("agents refuse ids and kinds the scenario does not declare") {
    const Scenario sc = zero_delay(1.0);
    AgentOptions a;
    a.connect = "127.0.0.1:1";
    a.id = "9";
    a.kind = "virtual";
    CHECK_THROWS_AS(run_agent(sc, a), std::invalid_argument);
    a.id = "1";
    CHECK_THROWS_AS(run_agent(sc, a), std::invalid_argument);
  }
}
