#pragma once

#include "mcct/dynamics.hpp"
#include "mcct/geometry.hpp"

#include <optional>
#include <stdexcept>

namespace mcct {

/// Longitudinal feedback gains. Gains are scale-free; d_des is full-scale
/// meters.
struct CaccGains {
  double k_p = 0.25;   // 1/s^2
  double k_v1 = 0.6;   // 1/s, head-velocity term
  double k_v2 = 0.6;   // 1/s, predecessor-velocity term
  double d_des = 0.6 * kMiniatureScale;

  /// Gains tuned for the miniature vehicles.
  static CaccGains miniature() { return {0.25, 0.6, 0.6, 0.6 * kMiniatureScale}; }
  /// Gains tuned for the virtual vehicles.
  static CaccGains virtual_vehicle() { return {0.1, 0.5, 0.5, 0.6 * kMiniatureScale}; }

  void validate() const;
};

/// a = k_p (gap - d_des) + k_v1 (v_head - v_i) + k_v2 (v_prev - v_i), where
/// gap = p_prev - p_i > 0 is the forward distance to the predecessor. An
/// excess gap accelerates the follower.
double cacc_accel(const CaccGains& g, double p_i, double p_prev, double v_i, double v_prev, double v_head);

/// Same law with the along-track gap supplied directly.
double cacc_accel_gap(const CaccGains& g, double gap, double v_i, double v_prev, double v_head);

/// Velocity command from the last received velocity: max(0, v + a dt).
double accel_to_vcmd(double v_prev_received, double a, double dt);

struct PreviewParams {
  double lookahead_min = 1.5;   // m
  double lookahead_gain = 0.8;  // s
  double max_lateral = 2.0;     // m
};

class OffTrack : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pure-pursuit steering toward the centerline point one lookahead ahead of
/// the vehicle's projection. Throws OffTrack beyond max_lateral.
double lateral_preview(const VehicleState& s, const Track& track, const VehicleParams& p,
                       const PreviewParams& preview = {});

/// Head vehicle speed plan: base speed, then `cycles` periods of a sinusoid
/// once the trigger landmark is reached, then base speed again.
struct HeadProfile {
  double base_speed = 0.3 * kMiniatureScale;
  double amplitude = 0.1 * kMiniatureScale;
  double period = 3.5;
  double trigger_arclength = 0.0;
  int cycles = 2;

  void validate() const;
};

/// t_since_trigger is empty before the trigger has fired.
double head_reference(const HeadProfile& profile, std::optional<double> t_since_trigger);

}  // namespace mcct
