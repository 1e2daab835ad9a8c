#include "racer/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace racer {

void PidGains::validate() const {
  const auto non_negative = [](const Vec3& v) { return (v.array() >= 0.0).all(); };
  const auto positive = [](const Vec3& v) { return (v.array() > 0.0).all(); };
  if (!(non_negative(position_p) && non_negative(position_i) && non_negative(position_d) &&
        non_negative(attitude_p) && non_negative(attitude_i) && non_negative(attitude_d))) {
    throw std::invalid_argument("controller gains must be non-negative");
  }
  if (!(positive(position_integrator_limit) && positive(attitude_integrator_limit) &&
        positive(acceleration_limit) && positive(angular_acceleration_limit) && max_tilt > 0.0)) {
    throw std::invalid_argument("controller limits must be positive");
  }
}

namespace {

Vec3 clamp_symmetric(const Vec3& v, const Vec3& limit) { return v.cwiseMax(-limit).cwiseMin(limit); }

}  // namespace

ControlOutput control_step(const DroneState& state, const Setpoint& sp, const ControllerState& ctl,
                           const PidGains& g, const DroneParams& params, double dt) {
  ControlOutput out;

  // Outer loop: position error -> desired acceleration.
  const Vec3 pos_error = sp.target_position - state.position;
  out.next.position_integral =
      clamp_symmetric(ctl.position_integral + pos_error * dt, g.position_integrator_limit);
  const Vec3 accel = clamp_symmetric(g.position_p.cwiseProduct(pos_error) +
                                         g.position_i.cwiseProduct(out.next.position_integral) -
                                         g.position_d.cwiseProduct(state.velocity),
                                     g.acceleration_limit);

  const double roll = state.attitude.x();
  const double pitch = state.attitude.y();
  const double yaw = state.attitude.z();
  const double tilt = std::max(std::cos(roll) * std::cos(pitch), 0.5);
  out.requested.thrust = std::max(0.0, params.mass * (params.gravity + accel.z()) / tilt);

  // Small-angle mapping from horizontal acceleration to roll/pitch.
  const double sy = std::sin(yaw), cy = std::cos(yaw);
  const double grav = params.gravity > 0.0 ? params.gravity : 1.0;
  const double roll_des = std::clamp((accel.x() * sy - accel.y() * cy) / grav, -g.max_tilt, g.max_tilt);
  const double pitch_des = std::clamp((accel.x() * cy + accel.y() * sy) / grav, -g.max_tilt, g.max_tilt);

  // Inner loop: attitude error -> angular acceleration -> torque.
  const Vec3 att_error(roll_des - roll, pitch_des - pitch, wrap_angle(sp.target_yaw - yaw));
  out.next.attitude_integral =
      clamp_symmetric(ctl.attitude_integral + att_error * dt, g.attitude_integrator_limit);
  const Vec3 ang_accel = clamp_symmetric(g.attitude_p.cwiseProduct(att_error) +
                                             g.attitude_i.cwiseProduct(out.next.attitude_integral) -
                                             g.attitude_d.cwiseProduct(state.body_rates),
                                         g.angular_acceleration_limit);
  out.requested.torque = params.inertia.diagonal().cwiseProduct(ang_accel);

  out.command = allocate_inverse(out.requested, params);
  return out;
}

Setpoint clamp_setpoint(const Setpoint& sp, const DroneState& state, double max_offset,
                        const Aabb& bounds) {
  Setpoint out;
  const Vec3 lo = state.position.array() - max_offset;
  const Vec3 hi = state.position.array() + max_offset;
  out.target_position = bounds.clamp(sp.target_position.cwiseMax(lo).cwiseMin(hi));
  out.target_yaw = wrap_angle(sp.target_yaw);
  return out;
}

}  // namespace racer
