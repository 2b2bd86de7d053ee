#include "mcct/geometry.hpp"

#include <algorithm>
#include <limits>

namespace mcct {

namespace {

constexpr double kLoopPerimeter = 245.0;  // 17.5 m lap at miniature scale
constexpr double kLoopRadius = 21.0;      // 1.5 m at miniature scale
constexpr double kTableLength = 126.0;    // 9 m x 5 m table at full scale
constexpr double kTableWidth = 70.0;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

double convert_length(double length, const Frame& from, const Frame& to) {
  return length * from.scale_to_full / to.scale_to_full;
}

Pose2D convert_pose(const Pose2D& p, const Frame& from, const Frame& to) {
  if (from == to) return p;
  const double k = from.scale_to_full / to.scale_to_full;
  return {p.x * k, p.y * k, p.theta};
}

Track::Track(std::vector<Eigen::Vector2d> points, double landmark_e)
    : points_(std::move(points)), landmark_e_(landmark_e) {
  cumulative_.resize(points_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i)
    cumulative_[i] = cumulative_[i - 1] + (points_[i] - points_[i - 1]).norm();
  if (landmark_e_ < 0.0 || landmark_e_ >= lap_length())
    throw DegenerateTrack("landmark E must lie in [0, lap_length)");
}

Track Track::mcct_loop(double max_spacing) {
  const double r = kLoopRadius;
  const double straight = (kLoopPerimeter - 2.0 * EIGEN_PI * r) / 2.0;
  const Eigen::Vector2d offset((kTableLength - (straight + 2.0 * r)) / 2.0 + r, kTableWidth / 2.0);

  std::vector<Eigen::Vector2d> pts;
  const int n_straight = static_cast<int>(std::ceil(straight / max_spacing));
  const int n_arc = static_cast<int>(std::ceil(EIGEN_PI * r / max_spacing));

  auto add_straight = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    for (int i = 0; i < n_straight; ++i) pts.push_back(a + (b - a) * (double(i) / n_straight));
  };
  auto add_arc = [&](const Eigen::Vector2d& c, double start_angle) {
    for (int i = 0; i < n_arc; ++i) {
      const double a = start_angle + EIGEN_PI * double(i) / n_arc;
      pts.push_back(c + r * Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
  };
  add_straight({0.0, -r}, {straight, -r});
  add_arc({straight, 0.0}, -EIGEN_PI / 2.0);
  add_straight({straight, r}, {0.0, r});
  add_arc({0.0, 0.0}, EIGEN_PI / 2.0);
  pts.push_back(pts.front());
  for (auto& p : pts) p += offset;
  return Track(std::move(pts), 0.0);
}

Track Track::from_waypoints(std::vector<Eigen::Vector2d> waypoints, double landmark_e) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(waypoints.size() + 1);
  for (const auto& w : waypoints) {
    if (!w.allFinite()) throw DegenerateTrack("waypoint is not finite");
    if (pts.empty() || (w - pts.back()).norm() > 1e-9) pts.push_back(w);
  }
  if (pts.size() >= 2 && (pts.front() - pts.back()).norm() <= 1e-9) pts.pop_back();
  if (pts.size() < 3) throw DegenerateTrack("track needs at least 3 distinct waypoints");
  pts.push_back(pts.front());
  return Track(std::move(pts), landmark_e);
}

double Track::wrap(double s) const {
  const double lap = lap_length();
  s = std::fmod(s, lap);
  if (s < 0.0) s += lap;
  if (s >= lap) s = 0.0;
  return s;
}

std::size_t Track::segment_index(double s) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, points_.size() - 2);
}

Eigen::Vector2d Track::point_at(double s) const {
  s = wrap(s);
  const std::size_t i = segment_index(s);
  const double len = cumulative_[i + 1] - cumulative_[i];
  const double u = len > 0.0 ? (s - cumulative_[i]) / len : 0.0;
  return points_[i] + u * (points_[i + 1] - points_[i]);
}

double Track::heading_at(double s) const {
  const std::size_t i = segment_index(wrap(s));
  const Eigen::Vector2d d = points_[i + 1] - points_[i];
  return std::atan2(d.y(), d.x());
}

Pose2D Track::pose_at(double s) const {
  const Eigen::Vector2d p = point_at(s);
  return {p.x(), p.y(), heading_at(s)};
}

TrackProjection Track::project(const Pose2D& pose) const {
  const Eigen::Vector2d q = pose.position();
  double best = std::numeric_limits<double>::infinity();
  bool best_at_end = false;
  TrackProjection out;
  // On a vertex the segment starting there wins, matching point_at.
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Eigen::Vector2d a = points_[i];
    const Eigen::Vector2d d = points_[i + 1] - a;
    const double len2 = d.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((q - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    const Eigen::Vector2d c = a + u * d;
    const double dist2 = (q - c).squaredNorm();
    if (dist2 < best || (dist2 == best && best_at_end)) {
      best = dist2;
      best_at_end = u == 1.0;
      const Eigen::Vector2d tangent = d.normalized();
      out.s = wrap(cumulative_[i] + u * std::sqrt(len2));
      out.lateral_error = cross2(tangent, q - c);
      out.heading_error = wrap_angle(pose.theta - std::atan2(d.y(), d.x()));
      out.point = c;
    }
  }
  return out;
}

double signed_gap(const Track& t, double s_follower, double s_leader) {
  double d = s_leader - s_follower;
  if (d <= 0.0) d += t.lap_length();
  return d;
}

}  // namespace mcct
