#include "mcct/agent.hpp"
#include "mcct/perception.hpp"
#include "mcct/rng.hpp"
#include "stats.hpp"

#include <doctest.h>

#include <cmath>
#include <variant>

using namespace mcct;
using namespace mcct::testing;

TEST_SUITE("perception") {
  TEST_CASE("a noiseless camera reports the true pose") {
    std::mt19937_64 rng(1);
    VehicleState truth;
    truth.pose = {56.0, -14.0, 0.7};
    const Observation o = observe("2", truth, LocalizationModel::noiseless(), 3.0, rng);
    const Pose2D full = convert_pose(o.pose, Frame::miniature(), Frame::full());
    CHECK(full.x == doctest::Approx(56.0).epsilon(1e-12));
    CHECK(full.y == doctest::Approx(-14.0).epsilon(1e-12));
    CHECK(full.theta == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(o.capture_time == 3.0);
    CHECK(o.available_time == 3.0);
  }

  TEST_CASE("frame schedule examples") {
    const LocalizationModel m;
    const auto a = frame_schedule(m, 0.0, 0.25);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(0.05 * i));
    const auto b = frame_schedule(m, 0.0, 0.05);
    REQUIRE(b.size() == 1);
    CHECK(b[0] == 0.0);
    CHECK(frame_schedule(m, 1.0, 1.0).empty());
    for (double t : frame_schedule(m, 0.013, 7.3)) CHECK(is_frame_time(m, t));
    CHECK_FALSE(is_frame_time(m, 0.06));
  }

  TEST_CASE("noise samples follow the configured Gaussians") {
    const LocalizationModel m;
    auto rng = make_stream(11, "perception:ks");
    VehicleState truth;
    truth.pose = {70.0, 35.0, 0.0};
    const Pose2D mini = convert_pose(truth.pose, Frame::full(), Frame::miniature());
    std::vector<double> ex, ey, delay;
    for (int i = 0; i < 10000; ++i) {
      const Observation o = observe("1", truth, m, 0.0, rng);
      ex.push_back((o.pose.x - mini.x) * 1000.0);
      ey.push_back((o.pose.y - mini.y) * 1000.0);
      delay.push_back(o.available_time * 1000.0);
    }
    CHECK(ks_normal_p(ex, m.noise_mean_x, m.noise_std_x) > 0.01);
    CHECK(ks_normal_p(ey, m.noise_mean_y, m.noise_std_y) > 0.01);
    CHECK(ks_normal_p(delay, m.processing_delay_mean, m.processing_delay_std) > 0.01);
    CHECK(mean_of(ex) == doctest::Approx(15.18).epsilon(0.04));
    CHECK(std_of(ey) == doctest::Approx(16.73).epsilon(0.05));
  }

  TEST_CASE("camera fixes follow the frame grid and never precede their processing delay") {
    const LocalizationModel m;
    const Track track = Track::mcct_loop();
    VehicleState init;
    init.pose = track.pose_at(10.0);
    VehicleAgent agent("2", EntityKind::EmulatedPhysical, VehicleParams::emulated_physical(), init, track, 9, m);
    const double dt = 0.01;
    int fixes = 0;
    double last_cap = -1.0;
    for (int k = 0; k <= 2000; ++k) {
      const double t = k * dt;
      if (k > 0) agent.advance(t, dt);
      for (const auto& msg : agent.emit(t, k % 5 == 0)) {
        const auto* obs = std::get_if<wire::Obs>(&msg);
        if (!obs) continue;
        ++fixes;
        CHECK(is_frame_time(m, obs->t_cap));
        CHECK(obs->t_cap > last_cap);
        CHECK(t - obs->t_cap >= 0.04);
        CHECK(t - obs->t_cap <= 0.07);
        last_cap = obs->t_cap;
      }
    }
    CHECK(fixes >= 395);
  }

  TEST_CASE("model validation") {
    LocalizationModel m;
    CHECK_NOTHROW(m.validate());
    m.frame_rate = 0.0;
    CHECK_THROWS(m.validate());
    m = LocalizationModel{};
    m.noise_std_x = -1.0;
    CHECK_THROWS(m.validate());
  }
}
