#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcct {

/// Physical miniature table to full-scale road ratio.
inline constexpr double kMiniatureScale = 14.0;

enum class FrameId { PhysicalMiniature, FullScale };

struct Frame {
  FrameId id = FrameId::FullScale;
  double scale_to_full = 1.0;

  static Frame miniature() { return {FrameId::PhysicalMiniature, kMiniatureScale}; }
  static Frame full() { return {FrameId::FullScale, 1.0}; }
  static Frame of(FrameId id) { return id == FrameId::PhysicalMiniature ? miniature() : full(); }

  bool operator==(const Frame&) const = default;
};

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  const Scalar pi = Scalar(EIGEN_PI);
  a = std::fmod(a + pi, Scalar(2) * pi);
  if (a <= Scalar(0)) a += Scalar(2) * pi;
  return a - pi;
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Eigen::Vector2d position() const { return {x, y}; }
  Eigen::Vector2d heading_vector() const { return {std::cos(theta), std::sin(theta)}; }
  bool operator==(const Pose2D&) const = default;
};

double convert_length(double length, const Frame& from, const Frame& to);
Pose2D convert_pose(const Pose2D& p, const Frame& from, const Frame& to);

class DegenerateTrack : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrackProjection {
  double s = 0.0;               // arc-length in [0, lap)
  double lateral_error = 0.0;   // positive = left of travel direction
  double heading_error = 0.0;   // pose heading minus track tangent, wrapped
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
};

/// Closed centerline polyline in full-scale meters with arc-length lookup.
/// Immutable once built.
class Track {
 public:
  /// Rounded-rectangle loop: two straights joined by semicircles, 245 m
  /// perimeter, centered on the 126 m x 70 m full-scale table, travelled
  /// counter-clockwise. Arc-length 0 (and landmark E) is the start of the
  /// lower straight.
  static Track mcct_loop(double max_spacing = 0.25);

  /// Builds a track from explicit waypoints. The loop is closed automatically
  /// when the last waypoint differs from the first.
  static Track from_waypoints(std::vector<Eigen::Vector2d> waypoints, double landmark_e = 0.0);

  double lap_length() const { return cumulative_.back(); }
  double landmark_e() const { return landmark_e_; }
  const std::vector<Eigen::Vector2d>& centerline() const { return points_; }

  /// Wraps any arc-length into [0, lap).
  double wrap(double s) const;
  Eigen::Vector2d point_at(double s) const;
  double heading_at(double s) const;
  Pose2D pose_at(double s) const;

  TrackProjection project(const Pose2D& p) const;

 private:
  Track(std::vector<Eigen::Vector2d> points, double landmark_e);
  std::size_t segment_index(double s) const;

  std::vector<Eigen::Vector2d> points_;  // closed: points_.front() == points_.back()
  std::vector<double> cumulative_;       // cumulative_[i] = arc-length at points_[i]
  double landmark_e_ = 0.0;
};

inline TrackProjection project_to_track(const Track& t, const Pose2D& p) { return t.project(p); }

/// Forward distance from follower to leader along the travel direction, in
/// (0, lap]. Coincident positions read as a full lap.
double signed_gap(const Track& t, double s_follower, double s_leader);

}  // namespace mcct
