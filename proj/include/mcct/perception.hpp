#pragma once

#include "mcct/dynamics.hpp"
#include "mcct/geometry.hpp"

#include <random>
#include <string>
#include <vector>

namespace mcct {

/// Statistical stand-in for the roadside color-block localization. Noise
/// values are in millimetres at miniature scale.
struct LocalizationModel {
  double noise_mean_x = 15.18;
  double noise_std_x = 19.65;
  double noise_mean_y = 6.68;
  double noise_std_y = 16.73;
  double heading_noise_std = 0.02;      // rad
  double frame_rate = 20.0;             // Hz
  double processing_delay_mean = 49.55; // ms
  double processing_delay_std = 1.39;   // ms

  static LocalizationModel noiseless();
  void validate() const;
};

struct Observation {
  std::string vehicle_id;
  Pose2D pose;  // miniature frame
  double capture_time = 0.0;
  double available_time = 0.0;
};

/// Samples one camera fix of `truth` (a full-scale state) captured at `t`.
/// Means are applied as constant biases.
Observation observe(const std::string& vehicle_id, const VehicleState& truth, const LocalizationModel& model,
                    double t, std::mt19937_64& rng);

/// Capture instants k / frame_rate lying in [t_start, t_end).
std::vector<double> frame_schedule(const LocalizationModel& model, double t_start, double t_end);

/// True when t lies on the camera frame grid.
bool is_frame_time(const LocalizationModel& model, double t);

}  // namespace mcct
