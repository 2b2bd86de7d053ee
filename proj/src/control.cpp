#include "mcct/control.hpp"

#include <algorithm>
#include <cmath>

namespace mcct {

void CaccGains::validate() const {
  if (!(k_p > 0.0 && k_v1 > 0.0 && k_v2 > 0.0)) throw std::invalid_argument("CACC gains must be > 0");
  if (!(d_des > 0.0)) throw std::invalid_argument("d_des must be > 0");
}

double cacc_accel(const CaccGains& g, double p_i, double p_prev, double v_i, double v_prev, double v_head) {
  return cacc_accel_gap(g, p_prev - p_i, v_i, v_prev, v_head);
}

double cacc_accel_gap(const CaccGains& g, double gap, double v_i, double v_prev, double v_head) {
  return g.k_p * (gap - g.d_des) + g.k_v1 * (v_head - v_i) + g.k_v2 * (v_prev - v_i);
}

double accel_to_vcmd(double v_prev_received, double a, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  return std::max(0.0, v_prev_received + a * dt);
}

double lateral_preview(const VehicleState& s, const Track& track, const VehicleParams& p,
                       const PreviewParams& preview) {
  const TrackProjection proj = track.project(s.pose);
  if (std::abs(proj.lateral_error) > preview.max_lateral)
    throw OffTrack("lateral error " + std::to_string(proj.lateral_error) + " m exceeds " +
                   std::to_string(preview.max_lateral) + " m");
  const double lookahead = std::max(preview.lookahead_min, preview.lookahead_gain * s.v);
  const Eigen::Vector2d target = track.point_at(proj.s + lookahead);
  const Eigen::Vector2d d = target - s.pose.position();
  const double dist = d.norm();
  if (dist < 1e-9) return 0.0;
  const double alpha = wrap_angle(std::atan2(d.y(), d.x()) - s.pose.theta);
  const double phi = std::atan(2.0 * p.wheelbase * std::sin(alpha) / dist);
  return std::clamp(phi, -p.steer_max, p.steer_max);
}

void HeadProfile::validate() const {
  if (!(base_speed > amplitude && amplitude >= 0.0)) throw std::invalid_argument("need base_speed > amplitude >= 0");
  if (!(period > 0.0)) throw std::invalid_argument("period must be > 0");
  if (cycles < 0) throw std::invalid_argument("cycles must be >= 0");
}

double head_reference(const HeadProfile& profile, std::optional<double> t_since_trigger) {
  if (!t_since_trigger || *t_since_trigger < 0.0) return profile.base_speed;
  const double t = *t_since_trigger;
  if (t >= profile.cycles * profile.period) return profile.base_speed;
  return profile.base_speed + profile.amplitude * std::sin(2.0 * EIGEN_PI * t / profile.period);
}

}  // namespace mcct
