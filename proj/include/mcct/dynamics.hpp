#pragma once

#include "mcct/geometry.hpp"

#include <Eigen/Core>

#include <random>
#include <stdexcept>

namespace mcct {

enum class VehicleKind { Virtual, EmulatedPhysical };

/// Vehicle constants in full-scale units.
struct VehicleParams {
  double wheelbase = 0.14 * kMiniatureScale;
  double v_max = 1.0 * kMiniatureScale;
  double steer_max = 40.0 * EIGEN_PI / 180.0;
  double tau_v = 0.0;          // velocity tracking lag [s]
  double tau_phi = 0.0;        // steering lag [s]
  double noise_sigma_v = 0.0;  // [m/s per sqrt(s)]
  double accel_max = 2.5;      // [m/s^2]
  VehicleKind kind = VehicleKind::Virtual;

  /// Ideal bicycle with the miniature vehicle's geometry and limits.
  static VehicleParams virtual_vehicle();
  /// Miniature vehicle emulator: same geometry, lagged actuators, velocity noise.
  static VehicleParams emulated_physical();

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

struct VehicleState {
  Pose2D pose;
  double v = 0.0;
  double phi = 0.0;
  double v_cmd = 0.0;
  double phi_cmd = 0.0;
  double timestamp = 0.0;
  double v_disturbance = 0.0;  // part of v due to process noise (emulated vehicles)

  bool operator==(const VehicleState&) const = default;
};

class InvalidTimestep : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Continuous-time bicycle kinematics: d/dt (x, y, theta, v).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> bicycle_rate(const Eigen::Matrix<Scalar, 4, 1>& q, Scalar accel, Scalar steer,
                                         Scalar wheelbase) {
  Eigen::Matrix<Scalar, 4, 1> r;
  r << q(3) * std::cos(q(2)), q(3) * std::sin(q(2)), q(3) / wheelbase * std::tan(steer), accel;
  return r;
}

/// One classical RK4 step with inputs held over the step.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> bicycle_rk4(const Eigen::Matrix<Scalar, 4, 1>& q, Scalar accel, Scalar steer,
                                        Scalar wheelbase, Scalar dt) {
  const auto k1 = bicycle_rate<Scalar>(q, accel, steer, wheelbase);
  const auto k2 = bicycle_rate<Scalar>(q + dt / 2 * k1, accel, steer, wheelbase);
  const auto k3 = bicycle_rate<Scalar>(q + dt / 2 * k2, accel, steer, wheelbase);
  const auto k4 = bicycle_rate<Scalar>(q + dt * k3, accel, steer, wheelbase);
  return q + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

inline constexpr double kMaxTimestep = 0.1;

/// Ideal bicycle step. Speed saturation at 0 or v_max splits the step so the
/// pose never integrates a reversed or over-limit speed.
VehicleState step_bicycle(const VehicleState& s, const VehicleParams& p, double accel, double steer, double dt);

/// Miniature-vehicle emulator step: first-order velocity and steering lag
/// toward (v_cmd, phi_cmd) plus a Gaussian velocity perturbation of std
/// noise_sigma_v * sqrt(dt) per step, then bicycle pose integration. The
/// perturbation decays with the same lag tau_v; only the command-following
/// part of the speed is rate limited to accel_max, so noise does not pile up
/// while the actuator is saturated.
VehicleState step_emulated_physical(const VehicleState& s, const VehicleParams& p, double dt, std::mt19937_64& rng);

/// Acceleration that reaches v_cmd after dt, saturated at +-accel_max.
double command_to_accel(const VehicleState& s, double dt, double accel_max);

/// Virtual vehicle step driven by its velocity/steering command.
VehicleState step_virtual(const VehicleState& s, const VehicleParams& p, double dt);

/// Step commands used to compare an emulated vehicle with the ideal one.
/// The longitudinal step starts from rest; the lateral step starts from a
/// straight cruise at cruise_speed.
struct StepProtocol {
  double velocity_step = 0.3 * kMiniatureScale;  // m/s
  double cruise_speed = 0.3 * kMiniatureScale;   // m/s
  double steer_step = 10.0 * EIGEN_PI / 180.0;   // rad
  double duration = 5.0;                         // s
  double dt = 0.01;                              // s
};

struct StepResponseDeviation {
  double velocity = 0.0;  // mean |v_emulated - v_ideal| [m/s]
  double heading = 0.0;   // mean |theta_emulated - theta_ideal| [rad]
};

StepResponseDeviation step_response_deviation(const VehicleParams& emulated, const VehicleParams& ideal,
                                              const StepProtocol& protocol, std::mt19937_64& rng);

}  // namespace mcct
