#include "mcct/perception.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcct {

namespace {
constexpr double kGridTolerance = 1e-9;
}

LocalizationModel LocalizationModel::noiseless() {
  LocalizationModel m;
  m.noise_mean_x = m.noise_std_x = m.noise_mean_y = m.noise_std_y = 0.0;
  m.heading_noise_std = 0.0;
  m.processing_delay_mean = m.processing_delay_std = 0.0;
  return m;
}

void LocalizationModel::validate() const {
  if (noise_std_x < 0.0 || noise_std_y < 0.0 || heading_noise_std < 0.0 || processing_delay_std < 0.0)
    throw std::invalid_argument("localization std values must be >= 0");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("frame_rate must be > 0");
}

Observation observe(const std::string& vehicle_id, const VehicleState& truth, const LocalizationModel& model,
                    double t, std::mt19937_64& rng) {
  Pose2D mini = convert_pose(truth.pose, Frame::full(), Frame::miniature());
  std::normal_distribution<double> n01(0.0, 1.0);
  // Draw order is fixed (x, y, heading, delay) so streams stay reproducible.
  const double ex = (model.noise_mean_x + model.noise_std_x * n01(rng)) / 1000.0;
  const double ey = (model.noise_mean_y + model.noise_std_y * n01(rng)) / 1000.0;
  const double eh = model.heading_noise_std * n01(rng);
  const double delay_ms = model.processing_delay_mean + model.processing_delay_std * n01(rng);

  Observation obs;
  obs.vehicle_id = vehicle_id;
  obs.pose = {mini.x + ex, mini.y + ey, wrap_angle(mini.theta + eh)};
  obs.capture_time = t;
  obs.available_time = t + std::max(0.0, delay_ms) / 1000.0;
  return obs;
}

std::vector<double> frame_schedule(const LocalizationModel& model, double t_start, double t_end) {
  std::vector<double> out;
  if (!(t_start < t_end)) return out;
  const auto k0 = static_cast<long long>(std::ceil(t_start * model.frame_rate - kGridTolerance));
  for (long long k = k0;; ++k) {
    const double t = static_cast<double>(k) / model.frame_rate;
    if (t >= t_end - kGridTolerance) break;
    out.push_back(t);
  }
  return out;
}

bool is_frame_time(const LocalizationModel& model, double t) {
  const double k = t * model.frame_rate;
  return std::abs(k - std::round(k)) < 1e-6;
}

}  // namespace mcct
