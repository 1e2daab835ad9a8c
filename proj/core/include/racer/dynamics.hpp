#pragma once

#include <Eigen/Dense>

namespace racer {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Physics rate of the simulator (240 Hz).
inline constexpr double kPhysicsDt = 1.0 / 240.0;

/// Pitch/roll magnitude beyond which the Euler-rate transform is considered
/// singular and the drone is treated as crashed (89 degrees).
inline constexpr double kMaxTiltRad = 89.0 * 3.14159265358979323846 / 180.0;

/// 12-dimensional rigid-body state of one quadrotor.
///
/// Position and velocity are expressed in the world frame, attitude as Z-Y-X
/// Euler angles (roll, pitch, yaw) and body rates in the body frame.
struct DroneState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 attitude = Vec3::Zero();
  Vec3 body_rates = Vec3::Zero();

  [[nodiscard]] bool is_finite() const;
  /// Roll and pitch inside the non-singular region of the Euler kinematics.
  [[nodiscard]] bool attitude_nominal() const;

  bool operator==(const DroneState&) const = default;
};

struct DroneParams {
  double mass = 0.027;
  double gravity = 9.81;
  Mat3 inertia = Vec3(1.4e-5, 1.4e-5, 2.17e-5).asDiagonal();
  double arm_length = 0.0397;
  double thrust_coeff = 3.16e-10;
  double torque_coeff = 7.94e-12;
  Vec3 drag = Vec3::Constant(9.18e-7);  // diagonal of K_d
  double collision_radius = 0.06;
  double motor_speed_max = 21713.0;

  /// Throws std::invalid_argument when a physical invariant is violated.
  void validate() const;

  [[nodiscard]] double max_speed_squared() const { return motor_speed_max * motor_speed_max; }
  /// Per-motor squared speed that balances gravity at level attitude.
  [[nodiscard]] double hover_speed_squared() const {
    return mass * gravity / (4.0 * thrust_coeff);
  }

  bool operator==(const DroneParams&) const = default;
};

struct MotorCommand {
  Vec4 speeds_squared = Vec4::Zero();
};

struct Wrench {
  double thrust = 0.0;
  Vec3 torque = Vec3::Zero();
};

/// The 4x4 allocation matrix mapping squared motor speeds to
/// (thrust, roll torque, pitch torque, yaw torque).
[[nodiscard]] Mat4 allocation_matrix(const DroneParams& params);

[[nodiscard]] Wrench allocate(const MotorCommand& cmd, const DroneParams& params);

/// Inverse allocation. Entries that leave [0, motor_speed_max^2] are clamped.
[[nodiscard]] MotorCommand allocate_inverse(const Wrench& wrench, const DroneParams& params);

[[nodiscard]] MotorCommand hover_command(const DroneParams& params);

/// Body-to-world rotation R = Rz(yaw) * Ry(pitch) * Rx(roll).
[[nodiscard]] Mat3 rotation_matrix(const Vec3& attitude);

/// Maps body rates to Euler-angle rates for the Z-Y-X convention.
[[nodiscard]] Mat3 euler_rate_matrix(const Vec3& attitude);

/// Wraps an angle to [-pi, pi).
[[nodiscard]] double wrap_angle(double angle);

/// Time derivative of the 12-dimensional state (velocity, acceleration,
/// Euler rates, angular acceleration) for a fixed motor command.
struct StateDerivative {
  Vec3 velocity;
  Vec3 acceleration;
  Vec3 attitude_rate;
  Vec3 angular_acceleration;
};

[[nodiscard]] StateDerivative derivative(const DroneState& state, const Wrench& wrench,
                                         const DroneParams& params);

/// Advances the state by dt with one classical Runge-Kutta step. The motor
/// command is held constant over the step. Yaw of the result is wrapped; a
/// diverged integration yields a state whose is_finite() is false.
[[nodiscard]] DroneState step(const DroneState& state, const MotorCommand& cmd,
                              const DroneParams& params, double dt = kPhysicsDt);

}  // namespace racer
