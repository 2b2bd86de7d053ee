#include "mcct/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcct {

namespace {

void check_dt(double dt) {
  if (!(dt > 0.0 && dt <= kMaxTimestep))
    throw InvalidTimestep("timestep " + std::to_string(dt) + " outside (0, 0.1]");
}

Eigen::Vector4d to_vec(const VehicleState& s) { return {s.pose.x, s.pose.y, s.pose.theta, s.v}; }

}  // namespace

VehicleParams VehicleParams::virtual_vehicle() { return VehicleParams{}; }

VehicleParams VehicleParams::emulated_physical() {
  VehicleParams p;
  p.kind = VehicleKind::EmulatedPhysical;
  p.tau_v = 0.02;
  p.tau_phi = 0.10;
  p.noise_sigma_v = 0.02 * kMiniatureScale;
  return p;
}

void VehicleParams::validate() const {
  if (!(wheelbase > 0.0)) throw std::invalid_argument("wheelbase must be > 0");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be > 0");
  if (!(steer_max > 0.0 && steer_max <= EIGEN_PI / 2.0))
    throw std::invalid_argument("steer_max must lie in (0, pi/2]");
  if (!(accel_max > 0.0)) throw std::invalid_argument("accel_max must be > 0");
  if (tau_v < 0.0 || tau_phi < 0.0 || noise_sigma_v < 0.0)
    throw std::invalid_argument("lag and noise parameters must be >= 0");
  if (kind == VehicleKind::Virtual && (tau_v != 0.0 || tau_phi != 0.0 || noise_sigma_v != 0.0))
    throw std::invalid_argument("virtual vehicles carry no actuator lag or process noise");
}

VehicleState step_bicycle(const VehicleState& s, const VehicleParams& p, double accel, double steer, double dt) {
  check_dt(dt);
  steer = std::clamp(steer, -p.steer_max, p.steer_max);

  Eigen::Vector4d q = to_vec(s);
  q(3) = std::clamp(q(3), 0.0, p.v_max);

  // Time until the speed hits a bound under constant acceleration.
  double t_sat = dt;
  if (accel < 0.0) t_sat = std::min(dt, q(3) / -accel);
  else if (accel > 0.0) t_sat = std::min(dt, (p.v_max - q(3)) / accel);

  if (t_sat > 0.0) q = bicycle_rk4<double>(q, accel, steer, p.wheelbase, t_sat);
  if (t_sat < dt) {
    q(3) = accel < 0.0 ? 0.0 : p.v_max;
    q = bicycle_rk4<double>(q, 0.0, steer, p.wheelbase, dt - t_sat);
  }

  VehicleState out = s;
  out.pose = {q(0), q(1), wrap_angle(q(2))};
  out.v = std::clamp(q(3), 0.0, p.v_max);
  out.phi = steer;
  out.timestamp = s.timestamp + dt;
  return out;
}

VehicleState step_emulated_physical(const VehicleState& s, const VehicleParams& p, double dt, std::mt19937_64& rng) {
  check_dt(dt);
  const double v_cmd = std::clamp(s.v_cmd, 0.0, p.v_max);
  const double phi_cmd = std::clamp(s.phi_cmd, -p.steer_max, p.steer_max);

  // Exact first-order responses over the step; phi_mean is the time average
  // of the steering angle across the step.
  double phi_new = phi_cmd;
  double phi_mean = phi_cmd;
  if (p.tau_phi > 0.0) {
    const double decay = std::exp(-dt / p.tau_phi);
    phi_new = phi_cmd + (s.phi - phi_cmd) * decay;
    phi_mean = phi_cmd + (s.phi - phi_cmd) * p.tau_phi / dt * (1.0 - decay);
  }
  const double decay_v = p.tau_v > 0.0 ? std::exp(-dt / p.tau_v) : 0.0;
  const double base = s.v - s.v_disturbance;
  const double v_target = v_cmd + (base - v_cmd) * decay_v;
  const double base_new = base + std::clamp(v_target - base, -p.accel_max * dt, p.accel_max * dt);
  double disturbance = s.v_disturbance * decay_v;
  if (p.noise_sigma_v > 0.0) disturbance += std::normal_distribution<double>(0.0, p.noise_sigma_v * std::sqrt(dt))(rng);
  const double v_new = std::clamp(base_new + disturbance, 0.0, p.v_max);

  VehicleState out = step_bicycle(s, p, (v_new - s.v) / dt, phi_mean, dt);
  out.v = v_new;
  out.v_disturbance = v_new - base_new;
  out.phi = std::clamp(phi_new, -p.steer_max, p.steer_max);
  return out;
}

double command_to_accel(const VehicleState& s, double dt, double accel_max) {
  return std::clamp((s.v_cmd - s.v) / dt, -accel_max, accel_max);
}

VehicleState step_virtual(const VehicleState& s, const VehicleParams& p, double dt) {
  VehicleState cmd = s;
  cmd.v_cmd = std::clamp(s.v_cmd, 0.0, p.v_max);
  return step_bicycle(s, p, command_to_accel(cmd, dt, p.accel_max), s.phi_cmd, dt);
}

StepResponseDeviation step_response_deviation(const VehicleParams& emulated, const VehicleParams& ideal,
                                              const StepProtocol& protocol, std::mt19937_64& rng) {
  check_dt(protocol.dt);
  const auto steps = static_cast<int>(std::llround(protocol.duration / protocol.dt));
  if (steps <= 0) throw std::invalid_argument("step response duration must cover at least one step");
  StepResponseDeviation d;

  VehicleState e, v;
  e.v_cmd = v.v_cmd = protocol.velocity_step;
  for (int k = 0; k < steps; ++k) {
    e = step_emulated_physical(e, emulated, protocol.dt, rng);
    v = step_virtual(v, ideal, protocol.dt);
    d.velocity += std::abs(e.v - v.v);
  }

  e = v = VehicleState{};
  e.v = e.v_cmd = v.v = v.v_cmd = protocol.cruise_speed;
  e.phi_cmd = v.phi_cmd = protocol.steer_step;
  for (int k = 0; k < steps; ++k) {
    e = step_emulated_physical(e, emulated, protocol.dt, rng);
    v = step_virtual(v, ideal, protocol.dt);
    d.heading += std::abs(wrap_angle(e.pose.theta - v.pose.theta));
  }

  d.velocity /= steps;
  d.heading /= steps;
  return d;
}

}  // namespace mcct
