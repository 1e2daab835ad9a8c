#include "racer/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace racer {

bool DroneState::is_finite() const {
  return position.allFinite() && velocity.allFinite() && attitude.allFinite() &&
         body_rates.allFinite();
}

bool DroneState::attitude_nominal() const {
  return std::abs(attitude.x()) < kMaxTiltRad && std::abs(attitude.y()) < kMaxTiltRad;
}

void DroneParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("drone mass must be positive");
  if (!(gravity >= 0.0)) throw std::invalid_argument("gravity must be non-negative");
  if (!(arm_length > 0.0 && thrust_coeff > 0.0 && torque_coeff > 0.0)) {
    throw std::invalid_argument("arm length, thrust and torque coefficients must be positive");
  }
  if ((drag.array() < 0.0).any()) throw std::invalid_argument("drag coefficients must be >= 0");
  if (!(motor_speed_max > 0.0)) throw std::invalid_argument("motor_speed_max must be positive");
  if (!(collision_radius > 0.0)) throw std::invalid_argument("collision_radius must be positive");
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw std::invalid_argument("inertia must be symmetric");
  }
  Eigen::LLT<Mat3> llt(inertia);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("inertia must be positive-definite");
}

Mat4 allocation_matrix(const DroneParams& p) {
  const double kf = p.thrust_coeff;
  const double lkf = p.arm_length * p.thrust_coeff;
  const double km = p.torque_coeff;
  Mat4 m;
  // clang-format off
  m <<  kf,  kf,  kf,  kf,
       0.0, lkf, 0.0, -lkf,
      -lkf, 0.0, lkf, 0.0,
        km, -km,  km, -km;
  // clang-format on
  return m;
}

Wrench allocate(const MotorCommand& cmd, const DroneParams& params) {
  const Vec4 out = allocation_matrix(params) * cmd.speeds_squared;
  return {out[0], out.tail<3>()};
}

MotorCommand allocate_inverse(const Wrench& w, const DroneParams& p) {
  // Closed-form inverse of the allocation matrix.
  const double sum = w.thrust / p.thrust_coeff;                       // w1 + w2 + w3 + w4
  const double roll = w.torque.x() / (p.arm_length * p.thrust_coeff);  // w2 - w4
  const double pitch = w.torque.y() / (p.arm_length * p.thrust_coeff); // w3 - w1
  const double yaw = w.torque.z() / p.torque_coeff;                    // (w1 + w3) - (w2 + w4)

  const double odd = 0.5 * (sum + yaw);   // w1 + w3
  const double even = 0.5 * (sum - yaw);  // w2 + w4

  MotorCommand cmd;
  cmd.speeds_squared << 0.5 * (odd - pitch), 0.5 * (even + roll), 0.5 * (odd + pitch),
      0.5 * (even - roll);
  cmd.speeds_squared = cmd.speeds_squared.cwiseMax(0.0).cwiseMin(p.max_speed_squared());
  return cmd;
}

MotorCommand hover_command(const DroneParams& params) {
  return {Vec4::Constant(params.hover_speed_squared())};
}

Mat3 rotation_matrix(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y()), sp = std::sin(attitude.y());
  const double cy = std::cos(attitude.z()), sy = std::sin(attitude.z());
  Mat3 r;
  // clang-format off
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
          -sp,               cp * sr,               cp * cr;
  // clang-format on
  return r;
}

Mat3 euler_rate_matrix(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y());
  const double tp = std::tan(attitude.y());
  Mat3 w;
  // clang-format off
  w << 1.0, sr * tp, cr * tp,
       0.0,      cr,     -sr,
       0.0, sr / cp, cr / cp;
  // clang-format on
  return w;
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle + std::numbers::pi, two_pi);
  if (wrapped < 0.0) wrapped += two_pi;
  wrapped -= std::numbers::pi;
  // fmod can round up to exactly pi for inputs just below an odd multiple.
  if (wrapped >= std::numbers::pi) wrapped -= two_pi;
  return wrapped;
}

StateDerivative derivative(const DroneState& s, const Wrench& w, const DroneParams& p) {
  const Mat3 rot = rotation_matrix(s.attitude);
  const Vec3 thrust_world = rot.col(2) * w.thrust;
  const Vec3 drag_force = p.drag.cwiseProduct(s.velocity);

  StateDerivative d;
  d.velocity = s.velocity;
  d.acceleration = (thrust_world - drag_force) / p.mass - Vec3(0.0, 0.0, p.gravity);
  d.attitude_rate = euler_rate_matrix(s.attitude) * s.body_rates;
  const Vec3 gyro = s.body_rates.cross(p.inertia * s.body_rates);
  d.angular_acceleration = p.inertia.ldlt().solve(w.torque - gyro);
  return d;
}

namespace {

DroneState advance(const DroneState& s, const StateDerivative& d, double h) {
  DroneState out;
  out.position = s.position + h * d.velocity;
  out.velocity = s.velocity + h * d.acceleration;
  out.attitude = s.attitude + h * d.attitude_rate;
  out.body_rates = s.body_rates + h * d.angular_acceleration;
  return out;
}

}  // namespace

DroneState step(const DroneState& s, const MotorCommand& cmd, const DroneParams& p, double dt) {
  const Wrench w = allocate(cmd, p);

  const StateDerivative k1 = derivative(s, w, p);
  const StateDerivative k2 = derivative(advance(s, k1, 0.5 * dt), w, p);
  const StateDerivative k3 = derivative(advance(s, k2, 0.5 * dt), w, p);
  const StateDerivative k4 = derivative(advance(s, k3, dt), w, p);

  const double h = dt / 6.0;
  DroneState out;
  out.position = s.position + h * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
  out.velocity = s.velocity + h * (k1.acceleration + 2.0 * k2.acceleration +
                                   2.0 * k3.acceleration + k4.acceleration);
  out.attitude = s.attitude + h * (k1.attitude_rate + 2.0 * k2.attitude_rate +
                                   2.0 * k3.attitude_rate + k4.attitude_rate);
  out.body_rates = s.body_rates + h * (k1.angular_acceleration + 2.0 * k2.angular_acceleration +
                                       2.0 * k3.angular_acceleration + k4.angular_acceleration);
  if (std::isfinite(out.attitude.z())) out.attitude.z() = wrap_angle(out.attitude.z());
  return out;
}

}  // namespace racer
