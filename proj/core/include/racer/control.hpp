#pragma once

#include "racer/dynamics.hpp"

namespace racer {

/// Axis-aligned box used for world bounds.
struct Aabb {
  Vec3 min = Vec3::Constant(-10.0);
  Vec3 max = Vec3::Constant(10.0);

  [[nodiscard]] bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  [[nodiscard]] Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }

  bool operator==(const Aabb&) const = default;
};

/// Waypoint + yaw command issued by the high-level policy.
struct Setpoint {
  Vec3 target_position = Vec3::Zero();
  double target_yaw = 0.0;
};

/// Gains of the cascade controller.
///
/// The outer loop maps position error to a desired acceleration (m/s^2); the
/// inner loop maps attitude error to angular acceleration (rad/s^2), which is
/// scaled by the inertia diagonal into torque.
struct PidGains {
  Vec3 position_p{6.0, 6.0, 8.0};
  Vec3 position_i{0.1, 0.1, 0.4};
  Vec3 position_d{4.2, 4.2, 5.0};
  Vec3 attitude_p{400.0, 400.0, 60.0};
  Vec3 attitude_i{0.0, 0.0, 0.0};
  Vec3 attitude_d{40.0, 40.0, 12.0};
  Vec3 position_integrator_limit = Vec3::Constant(0.5);
  Vec3 attitude_integrator_limit = Vec3::Constant(0.5);
  /// Clamp on the commanded acceleration, m/s^2.
  Vec3 acceleration_limit{12.0, 12.0, 8.0};
  /// Clamp on the commanded angular acceleration, rad/s^2.
  Vec3 angular_acceleration_limit{400.0, 400.0, 40.0};
  /// Desired roll/pitch clamp, radians (30 degrees).
  double max_tilt = 0.5235987755982988;

  void validate() const;
  bool operator==(const PidGains&) const = default;
};

/// Integrator memory of the controller; one instance per drone.
struct ControllerState {
  Vec3 position_integral = Vec3::Zero();
  Vec3 attitude_integral = Vec3::Zero();

  bool operator==(const ControllerState&) const = default;
};

struct ControlOutput {
  MotorCommand command;
  ControllerState next;
  /// Thrust and torques requested before motor saturation.
  Wrench requested;
};

/// One tick of the cascade controller.
///
/// Derivative action uses measured velocity and body rates rather than
/// differenced errors, so setpoint jumps do not produce derivative kicks.
[[nodiscard]] ControlOutput control_step(const DroneState& state, const Setpoint& sp,
                                         const ControllerState& ctl, const PidGains& gains,
                                         const DroneParams& params, double dt = kPhysicsDt);

/// Limits a setpoint to a cube of half-width max_offset around the current
/// position and to the world bounds, and wraps the yaw.
[[nodiscard]] Setpoint clamp_setpoint(const Setpoint& sp, const DroneState& state,
                                      double max_offset, const Aabb& bounds);

}  // namespace racer
