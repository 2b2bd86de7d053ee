#include "mcct/scenario.hpp"
#include "presets.hpp"

#include <doctest.h>

using namespace mcct;
using namespace mcct::testing;
using nlohmann::json;

namespace {

std::string rejection_path(const json& j) {
  try {
    scenario_from(j);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<accepted>";
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("experiment A preset") {
    const Scenario sc = load_scenario(preset_path("experiment_a.json"));
    CHECK(sc.name == "experiment_a");
    CHECK(sc.seed == 7);
    CHECK(sc.mode == RunMode::Lockstep);
    REQUIRE(sc.vehicles.size() == 6);
    for (int i = 0; i < 6; ++i) {
      const auto& v = sc.vehicles[i];
      CHECK(v.spec.id == std::to_string(i + 1));
      CHECK(v.spec.kind == (i < 3 ? EntityKind::EmulatedPhysical : EntityKind::Virtual));
      CHECK(v.spec.controller == (i == 0 ? ControllerKind::Head : ControllerKind::Cacc));
      CHECK(v.spec.gains.d_des == doctest::Approx(8.4));
      CHECK(v.params.kind == (i < 3 ? VehicleKind::EmulatedPhysical : VehicleKind::Virtual));
    }
    CHECK(sc.vehicles[1].spec.gains.k_p == 0.25);
    CHECK(sc.vehicles[4].spec.gains.k_p == 0.1);
    CHECK(sc.head.base_speed == doctest::Approx(4.2));
    CHECK(sc.head.amplitude == doctest::Approx(1.4));
    CHECK(sc.head.period == 3.5);
    CHECK(sc.links.size() == 8);
    CHECK(sc.links.at(LinkId::HmiUp).delay_std() == 2.74);
    CHECK(sc.physics_steps_per_control() == 5);
    CHECK(sc.control_offset_steps() == 1);
  }

  TEST_CASE("experiment B preset puts the scripted HDV fourth") {
    const Scenario sc = load_scenario(preset_path("experiment_b.json"));
    REQUIRE(sc.vehicles.size() == 6);
    const auto& hdv = sc.vehicles[3];
    CHECK(hdv.spec.kind == EntityKind::Hdv);
    CHECK(hdv.spec.controller == ControllerKind::Human);
    REQUIRE(hdv.script.has_value());
    CHECK(hdv.script->amplitude == doctest::Approx(0.15 * 14));
    CHECK(hdv.script->jitter_sigma == doctest::Approx(0.01 * 14));
    for (int i : {0, 1, 2, 4, 5}) CHECK_FALSE(sc.vehicles[i].script.has_value());
  }

  TEST_CASE("default spawn places the head before landmark E and followers at d_des") {
    const Scenario sc = load_scenario(preset_path("experiment_a.json"));
    const double lap = sc.track.lap_length();
    CHECK(signed_gap(sc.track, sc.vehicles[0].initial_s, sc.track.landmark_e()) == doctest::Approx(kHeadSpawnBeforeE));
    for (std::size_t i = 1; i < sc.vehicles.size(); ++i)
      CHECK(signed_gap(sc.track, sc.vehicles[i].initial_s, sc.vehicles[i - 1].initial_s) ==
            doctest::Approx(sc.vehicles[i].spec.gains.d_des));
    for (const auto& v : sc.vehicles) CHECK((v.initial_s >= 0.0 && v.initial_s < lap));
  }

  TEST_CASE("full units are taken as-is and mini units scale by 14") {
    json j = preset_json("experiment_a.json");
    j["units"] = "full";
    j["head"]["base_speed"] = 4.2;
    j["head"]["amplitude"] = 1.4;
    for (auto& v : j["vehicles"])
      if (v.contains("gains")) v["gains"]["d_des"] = 8.4;
    const Scenario full = scenario_from(j);
    const Scenario mini = load_scenario(preset_path("experiment_a.json"));
    CHECK(full.head.base_speed == doctest::Approx(mini.head.base_speed));
    CHECK(full.vehicles[3].spec.gains.d_des == doctest::Approx(mini.vehicles[3].spec.gains.d_des));
    CHECK(full.vehicles[3].params.v_max == doctest::Approx(mini.vehicles[3].params.v_max));
  }

  TEST_CASE("gain presets by name") {
    json j = preset_json("experiment_a.json");
    j["vehicles"][1]["gains"] = "virtual";
    j["vehicles"][4]["gains"] = "miniature";
    const Scenario sc = scenario_from(j);
    CHECK(sc.vehicles[1].spec.gains.k_p == 0.1);
    CHECK(sc.vehicles[4].spec.gains.k_p == 0.25);
  }

  TEST_CASE("invalid documents name the offending field") {
    const json base = preset_json("experiment_a.json");
    json j = base;
    j["vehicles"][2]["gainz"] = 1;
    CHECK(rejection_path(j) == "vehicles[2].gainz");
    j = base;
    j["vehicles"][1]["gains"]["k_p"] = "fast";
    CHECK(rejection_path(j) == "vehicles[1].gains.k_p");
    j = base;
    j["vehicles"][1]["gains"]["d_des"] = -1.0;
    CHECK(rejection_path(j) == "vehicles[1].gains.d_des");
    j = base;
    j["duration"] = 0;
    CHECK(rejection_path(j) == "duration");
    j = base;
    j["control_dt"] = 0.033;
    CHECK(rejection_path(j) == "control_dt");
    j = base;
    j["vehicles"][3]["id"] = "2";
    CHECK(rejection_path(j) == "vehicles[3].id");
    j = base;
    j["vehicles"][3]["kind"] = "spaceship";
    CHECK(rejection_path(j) == "vehicles[3].kind");
    j = base;
    j["vehicles"][2]["controller"] = "head";
    CHECK(rejection_path(j) == "vehicles[2].controller");
    j = base;
    j["vehicles"][2]["controller"] = "human";
    CHECK(rejection_path(j) == "vehicles[2].controller");
    j = base;
    j["links"]["warp"] = {{"mean", 1.0}, {"std", 0.1}, {"p99", 2.0}};
    CHECK(rejection_path(j) == "links.warp");
    j = base;
    j["units"] = "furlongs";
    CHECK(rejection_path(j) == "units");
    j = base;
    j["events"] = json::array({{{"t", 20.0}, {"type", "perturb"}, {"id", "9"}, {"dv", 0.1}}});
    CHECK(rejection_path(j) == "events[0].id");
    j = base;
    j["vehicles"] = json::array();
    CHECK(rejection_path(j) == "vehicles");
    j = preset_json("experiment_b.json");
    j["vehicles"][2]["script"] = j["vehicles"][3]["script"];
    CHECK(rejection_path(j) == "vehicles[2].script");
    CHECK_THROWS_AS(parse_scenario("{\"name\": "), ValidationError);
    CHECK_THROWS_AS(parse_scenario("[]"), ValidationError);
  }

  TEST_CASE("a missing file is reported with its path") {
    try {
      load_scenario("/no/such/scenario.json");
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("/no/such/scenario.json") != std::string::npos);
    }
  }

  TEST_CASE("per-link and localization overrides") {
    json j = preset_json("experiment_a.json");
    j["links"] = {{"preset", "zero"}, {"CameraUp", {{"mean", 2.0}, {"std", 0.5}, {"p99", 3.0}}}};
    j["localization"] = {{"preset", "noiseless"}, {"frame_rate", 10.0}};
    const Scenario sc = scenario_from(j);
    CHECK(sc.links.at(LinkId::CameraUp).delay_mean() == 2.0);
    CHECK(sc.links.at(LinkId::VehicleUp).delay_mean() == 0.0);
    CHECK(sc.localization.frame_rate == 10.0);
    CHECK(sc.localization.noise_std_x == 0.0);
  }

  TEST_CASE("waypoint tracks") {
    json j = preset_json("experiment_a.json");
    j["units"] = "full";
    j["head"] = {{"base_speed", 4.2}, {"amplitude", 1.4}, {"period", 3.5}, {"cycles", 2}};
    json pts = json::array();
    for (int i = 0; i < 360; ++i)
      pts.push_back({40.0 * std::cos(i * EIGEN_PI / 180.0), 40.0 * std::sin(i * EIGEN_PI / 180.0)});
    j["track"] = {{"type", "waypoints"}, {"points", pts}};
    for (auto& v : j["vehicles"]) v.erase("gains");
    const Scenario sc = scenario_from(j);
    CHECK(sc.track.lap_length() == doctest::Approx(2 * EIGEN_PI * 40.0).epsilon(1e-3));
    j["track"]["points"] = json::array({{0, 0}, {1, 1}});
    CHECK(rejection_path(j) == "track");
  }

  TEST_CASE("the scenario hash follows the document") {
    const json base = preset_json("experiment_a.json");
    json other = base;
    other["duration"] = 60.0;
    CHECK(scenario_from(base).hash() == scenario_from(base).hash());
    CHECK(scenario_from(base).hash() != scenario_from(other).hash());
    CHECK(scenario_from(base).hash().size() == 16);
  }
}
