#include "mcct/geometry.hpp"
#include "mcct/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mcct;

TEST_SUITE("geometry") {
  TEST_CASE("miniature poses scale by 14 into the full frame") {
    const Pose2D p = convert_pose({0.3, 0.5, 1.0}, Frame::miniature(), Frame::full());
    CHECK(p.x == doctest::Approx(4.2).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(p.theta == 1.0);

    const Pose2D back = convert_pose({4.2, 7.0, 1.0}, Frame::full(), Frame::miniature());
    CHECK(back.x == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(back.theta == 1.0);
  }

  TEST_CASE("full to full is the identity") {
    const Pose2D p{-12.25, 3.5, -2.0};
    CHECK(convert_pose(p, Frame::full(), Frame::full()) == p);
    CHECK(convert_length(7.0, Frame::full(), Frame::full()) == 7.0);
  }

  TEST_CASE("frame conversion round-trips") {
    auto rng = make_stream(1, "geometry:roundtrip");
    std::uniform_real_distribution<double> u(-200.0, 200.0), a(-3.0, 3.0);
    for (int i = 0; i < 10000; ++i) {
      const Pose2D p{u(rng), u(rng), a(rng)};
      const Pose2D q = convert_pose(convert_pose(p, Frame::full(), Frame::miniature()), Frame::miniature(), Frame::full());
      CHECK(std::abs(q.x - p.x) <= 1e-9 * std::max(1.0, std::abs(p.x)));
      CHECK(std::abs(q.y - p.y) <= 1e-9 * std::max(1.0, std::abs(p.y)));
      CHECK(q.theta == p.theta);
    }
  }

  TEST_CASE("wrap_angle lands in (-pi, pi]") {
    CHECK(wrap_angle(EIGEN_PI) == doctest::Approx(EIGEN_PI));
    CHECK(wrap_angle(-EIGEN_PI) == doctest::Approx(EIGEN_PI));
    CHECK(wrap_angle(3.0 * EIGEN_PI / 2.0) == doctest::Approx(-EIGEN_PI / 2.0));
    CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
  }

  TEST_CASE("the loop has the stated perimeter and closes") {
    const Track t = Track::mcct_loop();
    CHECK(t.lap_length() == doctest::Approx(245.0).epsilon(1e-3));
    CHECK((t.centerline().front() - t.centerline().back()).norm() < 1e-12);
    CHECK((t.point_at(0.0) - t.point_at(t.lap_length())).norm() < 1e-9);
    CHECK(t.wrap(-1.0) == doctest::Approx(t.lap_length() - 1.0));
  }

  TEST_CASE("a pose on a waypoint with tangent heading has no error") {
    const Track t = Track::mcct_loop();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < t.centerline().size(); ++i) {
      const Eigen::Vector2d w = t.centerline()[i];
      const Eigen::Vector2d d = t.centerline()[i + 1] - w;
      s += i > 0 ? (w - t.centerline()[i - 1]).norm() : 0.0;
      if (i % 37) continue;
      CHECK((t.point_at(s) - w).norm() < 1e-9);
      CHECK(t.heading_at(s) == doctest::Approx(std::atan2(d.y(), d.x())).epsilon(1e-9));
      const TrackProjection pr = t.project({w.x(), w.y(), std::atan2(d.y(), d.x())});
      CHECK(std::abs(pr.lateral_error) < 1e-9);
      CHECK(std::abs(pr.heading_error) < 1e-9);
    }
  }

  TEST_CASE("a left offset on a straight reads as positive lateral error") {
    const Track t = Track::mcct_loop();
    const Pose2D on = t.pose_at(10.0);  // lower straight
    const Eigen::Vector2d left = on.position() + 0.5 * Eigen::Vector2d(-std::sin(on.theta), std::cos(on.theta));
    const TrackProjection pr = t.project({left.x(), left.y(), on.theta});
    CHECK(pr.lateral_error == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(pr.s == doctest::Approx(10.0).epsilon(1e-9));
  }

  TEST_CASE("projection of a centerline point recovers its arc-length") {
    const Track t = Track::mcct_loop();
    for (double s = 0.0; s < t.lap_length(); s += 0.37) {
      const TrackProjection pr = t.project(t.pose_at(s));
      const double ds = std::abs(pr.s - s);
      CHECK(std::min(ds, t.lap_length() - ds) < 2e-3);
    }
  }

  TEST_CASE("projection matches a brute-force nearest point search") {
    const Track t = Track::mcct_loop();
    std::vector<Eigen::Vector2d> dense;
    for (double s = 0.0; s < t.lap_length(); s += 1e-3) dense.push_back(t.point_at(s));

    auto rng = make_stream(2, "geometry:brute");
    std::uniform_real_distribution<double> us(0.0, t.lap_length()), off(-3.0, 3.0), head(-3.0, 3.0);
    for (int i = 0; i < 40; ++i) {
      const Pose2D base = t.pose_at(us(rng));
      const double o = off(rng);
      const Pose2D p{base.x - o * std::sin(base.theta), base.y + o * std::cos(base.theta), head(rng)};
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : dense) best = std::min(best, (q - p.position()).norm());
      const TrackProjection pr = t.project(p);
      CHECK(std::abs(std::abs(pr.lateral_error) - best) < 2e-3);
      CHECK((pr.point - p.position()).norm() == doctest::Approx(std::abs(pr.lateral_error)).epsilon(1e-9));
    }
  }

  TEST_CASE("signed gap examples") {
    const Track t = Track::mcct_loop();
    const double lap = t.lap_length();
    CHECK(signed_gap(t, 10.0, 18.4) == doctest::Approx(8.4));
    CHECK(signed_gap(t, lap - 5.0, 3.4) == doctest::Approx(8.4));
    CHECK(signed_gap(t, 42.0, 42.0) == doctest::Approx(lap));
  }

  TEST_CASE("forward gaps in both directions add up to one lap") {
    const Track t = Track::mcct_loop();
    auto rng = make_stream(3, "geometry:gap");
    std::uniform_real_distribution<double> us(0.0, t.lap_length());
    for (int i = 0; i < 10000; ++i) {
      const double a = us(rng), b = us(rng);
      if (a == b) continue;
      CHECK(signed_gap(t, a, b) + signed_gap(t, b, a) == doctest::Approx(t.lap_length()).epsilon(1e-12));
    }
  }

  TEST_CASE("degenerate waypoint lists are rejected") {
    CHECK_THROWS_AS(Track::from_waypoints({{0, 0}, {1, 0}}), DegenerateTrack);
    CHECK_THROWS_AS(Track::from_waypoints({{0, 0}, {1, 0}, {std::nan(""), 1}}), DegenerateTrack);
    CHECK_THROWS_AS(Track::from_waypoints({{0, 0}, {10, 0}, {10, 10}}, 1000.0), DegenerateTrack);
    const Track tri = Track::from_waypoints({{0, 0}, {3, 0}, {3, 4}});
    CHECK(tri.lap_length() == doctest::Approx(12.0));
  }
}
