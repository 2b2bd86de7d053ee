#include "mcct/telemetry.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>

using namespace mcct;

namespace {

// Six vehicles whose oscillation shrinks by `decay` per position, each a
// little later than its predecessor, with gaps held at d_des.
Telemetry synthetic(double decay, double amplitude = 1.4) {
  Telemetry t;
  auto& h = t.header;
  h.scenario = "synthetic";
  h.scenario_hash = "0123456789abcdef";
  h.seed = 1;
  h.lap_length = 245.0;
  h.physics_dt = 0.01;
  h.control_dt = 0.05;
  h.base_speed = 4.2;
  h.amplitude = amplitude;
  h.period = 3.5;
  h.cycles = 2;
  h.metrics_tail = 15.0;
  for (int i = 1; i <= 6; ++i)
    h.vehicles.push_back({std::to_string(i), i < 4 ? "physical" : "virtual", i == 1 ? "head" : "cacc", i == 1 ? 0.0 : 8.4});
  const double trigger = 10.0;
  CoordinatorEvent e;
  e.t = trigger;
  e.type = "trigger";
  e.id = "1";
  t.events.push_back(e);
  for (int k = 0; k <= 1000; ++k) {
    const double time = k * 0.05;
    for (int i = 1; i <= 6; ++i) {
      const double local = time - trigger - 0.4 * (i - 1);
      const double a = amplitude * std::pow(decay, i - 1);
      TelemetryRow r;
      r.t = time;
      r.id = std::to_string(i);
      r.v = 4.2 + (local > 0.0 && local < 7.0 ? a * std::sin(2.0 * EIGEN_PI * local / 3.5) : 0.0);
      r.s = std::fmod(100.0 - 8.4 * (i - 1) + 4.2 * time, 245.0);
      r.gap = i == 1 ? 0.0 : 8.4;
      r.x = r.s;
      r.ft = time;
      r.fx = r.s;
      r.fy = 0.0;
      r.ftheta = 0.0;
      r.fv = r.v;
      t.rows.push_back(r);
    }
  }
  return t;
}

}  // namespace

TEST_SUITE("telemetry") {
  TEST_CASE("JSON lines round-trip") {
    Telemetry t = synthetic(0.7);
    t.rows[3].ft.reset();
    t.rows[3].fx.reset();
    t.rows[3].fy.reset();
    t.rows[3].ftheta.reset();
    t.rows[3].fv.reset();
    CoordinatorEvent ob;
    ob.t = 20.0;
    ob.type = "obstacle";
    ob.x = 3.0;
    ob.y = 4.0;
    ob.r = 0.5;
    t.events.push_back(ob);
    CoordinatorEvent fac;
    fac.t = 21.0;
    fac.type = "facility";
    fac.id = "light";
    fac.state = "green";
    t.events.push_back(fac);
    const std::string text = to_jsonl(t);
    const Telemetry back = parse_telemetry(text);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    REQUIRE(back.events.size() == 3);
    CHECK(back.events[1].type == "obstacle");
    CHECK(back.events[1].r == 0.5);
    CHECK(back.events[2].state == "green");
    CHECK(to_jsonl(back) == text);
    CHECK(text.rfind("{\"type\":\"header\"", 0) == 0);
  }

  TEST_CASE("CSV export has one line per row") {
    const Telemetry t = synthetic(0.7);
    const std::string csv = to_csv(t);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(t.rows.size() + 1));
    CHECK(csv.rfind("t,id,", 0) == 0);
  }

  TEST_CASE("malformed records report their line") {
    const std::string good = to_jsonl(synthetic(0.7));
    const std::string header = good.substr(0, good.find('\n') + 1);
    auto line_of = [](const std::string& text) -> std::size_t {
      try {
        parse_telemetry(text);
      } catch (const MalformedRecord& e) {
        return e.line();
      }
      return 0;
    };
    CHECK_THROWS_AS(parse_telemetry(""), MalformedRecord);
    CHECK(line_of("{\"type\":\"row\",\"t\":0}\n") == 1);
    CHECK(line_of(header + "{\"type\":\"row\",\"t\":0,\"id\":\"1\"}\n") == 2);
    CHECK(line_of(header + "{\"type\":\"row\",\"t\":0,\"id\":\"1\",\"s\":0,\"x\":0,\"y\":0,\"theta\":0,\"v\":0,"
                           "\"v_cmd\":0,\"phi_cmd\":0,\"gap\":0}\nnot json\n") == 3);
    CHECK(line_of(header + header) == 2);
    CHECK(line_of(header + "{\"type\":\"mystery\"}\n") == 2);

    // Rows must stay in (t, id) order.
    std::string swapped = good;
    const auto l2 = swapped.find('\n') + 1;
    const auto l3 = swapped.find('\n', l2) + 1;
    const auto l4 = swapped.find('\n', l3) + 1;
    const std::string row2 = swapped.substr(l2, l3 - l2), row3 = swapped.substr(l3, l4 - l3);
    swapped.replace(l2, l4 - l2, row3 + row2);
    CHECK_THROWS_AS(parse_telemetry(swapped), MalformedRecord);
  }

  TEST_CASE("geometric decay of 0.7 is measured as 0.7") {
    const MetricsReport m = compute_metrics(synthetic(0.7));
    CHECK(m.t_trigger == 10.0);
    CHECK(m.window_end == doctest::Approx(10.0 + 7.0 + 15.0));
    CHECK(m.order_preserved);
    REQUIRE(m.vehicles.size() == 6);
    CHECK(m.vehicles[0].attenuation == 1.0);
    CHECK(m.vehicles[0].peak_to_peak == doctest::Approx(2.8).epsilon(0.01));
    for (int i = 1; i < 6; ++i) {
      CHECK(m.vehicles[i].attenuation == doctest::Approx(0.7).epsilon(0.01 / 0.7));
      CHECK(m.vehicles[i].gap_rms == doctest::Approx(0.0));
    }
    CHECK(format_metrics(m).find("preserved") != std::string::npos);
  }

  TEST_CASE("flat traces read as unit attenuation") {
    const MetricsReport m = compute_metrics(synthetic(0.7, 0.0));
    for (const auto& v : m.vehicles) {
      CHECK(v.peak_to_peak == 0.0);
      CHECK(v.attenuation == 1.0);
      CHECK(v.settling_time == 0.0);
    }
    CHECK(attenuation_ratio(0.0, 0.0) == 1.0);
    CHECK(attenuation_ratio(1.0, 0.0) == std::numeric_limits<double>::infinity());
    CHECK(attenuation_ratio(1.0, 2.0) == 0.5);
  }

  TEST_CASE("metrics need a trigger and notice overtaking") {
    Telemetry t = synthetic(0.7);
    t.events.clear();
    CHECK_THROWS_AS(compute_metrics(t), WindowNotFound);
    t = synthetic(0.7);
    t.rows[100].gap = 240.0;
    CHECK_FALSE(compute_metrics(t).order_preserved);
  }

  TEST_CASE("gap error after the window") {
    Telemetry t = synthetic(0.7);
    for (auto& r : t.rows)
      if (r.id == "3" && r.t > 32.0) r.gap = 8.4 * 1.03;
    const MetricsReport m = compute_metrics(t);
    CHECK(m.vehicles[2].gap_rms_ratio == doctest::Approx(0.03));
  }

  TEST_CASE("replay rebuilds one snapshot per control tick from the fused columns") {
    const Telemetry t = synthetic(0.7);
    const auto snaps = replay_snapshots(t);
    REQUIRE(snaps.size() == 1001);
    CHECK(snaps[10].t == doctest::Approx(0.5));
    REQUIRE(snaps[10].vehicles.size() == 6);
    CHECK(snaps[10].vehicles[2].id == "3");
    CHECK(snaps[10].vehicles[2].x == t.rows[10 * 6 + 2].fx.value());
  }

  TEST_CASE("replay paces by the speed factor") {
    const Telemetry t = synthetic(0.7);  // 50 s of snapshots
    std::vector<double> stamps;
    const auto start = std::chrono::steady_clock::now();
    replay(t, 100.0, [&](const wire::Snapshot& s) { stamps.push_back(s.t); });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(stamps.size() == 1001);
    CHECK(stamps.back() - stamps.front() == doctest::Approx(50.0));
    CHECK(wall >= 0.49);
    CHECK(wall < 1.5);
  }

  TEST_CASE("replay rejects non-positive speeds") {
    const Telemetry t = synthetic(0.7);
    auto sink = [](const wire::Snapshot&) {};
    CHECK_THROWS_AS(replay(t, 0.0, sink), InvalidSpeed);
    CHECK_THROWS_AS(replay(t, -1.0, sink), InvalidSpeed);
    CHECK_THROWS_AS(replay(t, std::nan(""), sink), InvalidSpeed);
  }
}
