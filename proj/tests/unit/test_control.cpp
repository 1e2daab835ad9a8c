#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "racer/control.hpp"

namespace racer {
namespace {

struct Sim {
  DroneParams params;
  PidGains gains;
  DroneState state;
  ControllerState ctl;

  void run(const Setpoint& sp, double seconds, const std::function<void(double, const Sim&)>& each = {}) {
    const int n = static_cast<int>(std::lround(seconds / kPhysicsDt));
    for (int i = 0; i < n; ++i) {
      const ControlOutput out = control_step(state, sp, ctl, gains, params);
      state = step(state, out.command, params);
      ctl = out.next;
      if (each) each((i + 1) * kPhysicsDt, *this);
    }
  }
};

PidGains zero_gains() {
  PidGains g;
  for (Vec3* v : {&g.position_p, &g.position_i, &g.position_d, &g.attitude_p, &g.attitude_i, &g.attitude_d}) {
    v->setZero();
  }
  return g;
}

TEST(Control, AtSetpointCommandsHover) {
  const DroneParams p;
  DroneState s;
  s.position = Vec3(1.0, 2.0, 1.5);
  const Setpoint sp{s.position, 0.0};
  const ControlOutput out = control_step(s, sp, {}, PidGains{}, p);
  const double hover = p.hover_speed_squared();
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(out.command.speeds_squared[j], hover, hover * 1e-6);
}

TEST(Control, ZeroGainsGiveGravityFeedforward) {
  const DroneParams p;
  DroneState s;
  s.position = Vec3(0.0, 0.0, 1.0);
  s.velocity = Vec3(0.4, -0.1, 0.2);
  const ControlOutput out = control_step(s, Setpoint{Vec3(3.0, -2.0, 2.0), 1.0}, {}, zero_gains(), p);
  const MotorCommand hover = hover_command(p);
  EXPECT_LT((out.command.speeds_squared - hover.speeds_squared).norm(), 1e-6 * hover.speeds_squared.norm());
}

TEST(Control, ProportionalThrust) {
  const DroneParams p;
  PidGains g = zero_gains();
  const double c = 5.0;
  g.position_p.z() = c;
  DroneState s;
  s.position = Vec3(0.0, 0.0, 1.0);
  const ControlOutput out = control_step(s, Setpoint{Vec3(0.0, 0.0, 2.0), 0.0}, {}, g, p);
  EXPECT_NEAR(out.requested.thrust, p.mass * p.gravity + p.mass * c * 1.0, 1e-12);
}

TEST(Control, LateralStepSettlesWithinTwoSeconds) {
  Sim sim;
  sim.state.position = Vec3(0.0, 0.0, 1.5);
  const Setpoint sp{Vec3(1.0, 0.0, 1.5), 0.0};
  double last_outside = 0.0;
  double overshoot = 0.0;
  sim.run(sp, 5.0, [&](double t, const Sim& s) {
    const double err = (s.state.position - sp.target_position).norm();
    if (err > 0.05) last_outside = t;
    overshoot = std::max(overshoot, s.state.position.x() - 1.0);
  });
  EXPECT_LE(last_outside, 2.0);
  EXPECT_LE(overshoot, 0.2);
}

TEST(Control, HoverHoldDriftBelowOneCentimetre) {
  Sim sim;
  sim.state.position = Vec3(-1.0, 2.0, 1.5);
  const Setpoint sp{sim.state.position, 0.3};
  sim.state.attitude.z() = 0.3;
  double worst = 0.0;
  sim.run(sp, 30.0, [&](double, const Sim& s) {
    worst = std::max(worst, (s.state.position - sp.target_position).norm());
  });
  EXPECT_LT(worst, 0.01);
}

TEST(Control, IntegratorsStayBounded) {
  Sim sim;
  sim.gains.attitude_i = Vec3::Constant(5.0);
  sim.state.position = Vec3(0.0, 0.0, 1.5);
  // A setpoint the drone cannot reach in time keeps the error persistent.
  const Setpoint sp{Vec3(40.0, -40.0, 30.0), 2.5};
  bool bounded = true;
  sim.run(sp, 3.0, [&](double, const Sim& s) {
    const auto within = [](const Vec3& v, const Vec3& lim) { return (v.cwiseAbs().array() <= lim.array()).all(); };
    bounded = bounded && within(s.ctl.position_integral, s.gains.position_integrator_limit) &&
              within(s.ctl.attitude_integral, s.gains.attitude_integrator_limit);
  });
  EXPECT_TRUE(bounded);
  EXPECT_GT(sim.ctl.position_integral.cwiseAbs().maxCoeff(), 0.4);
}

TEST(Control, Deterministic) {
  DroneState s;
  s.position = Vec3(0.1, 0.2, 1.0);
  s.velocity = Vec3(0.5, 0.0, -0.1);
  const Setpoint sp{Vec3(1.0, 1.0, 1.0), 0.5};
  const ControlOutput a = control_step(s, sp, {}, PidGains{}, DroneParams{});
  const ControlOutput b = control_step(s, sp, {}, PidGains{}, DroneParams{});
  EXPECT_EQ(a.command.speeds_squared, b.command.speeds_squared);
  EXPECT_EQ(a.next, b.next);
}

TEST(Control, ClampSetpoint) {
  const Aabb bounds{Vec3(-20.0, -20.0, 0.0), Vec3(20.0, 20.0, 10.0)};
  DroneState s;
  s.position = Vec3(1.0, 1.0, 1.0);

  const Setpoint inside{Vec3(2.0, 0.5, 1.5), 0.2};
  const Setpoint a = clamp_setpoint(inside, s, 3.0, bounds);
  EXPECT_EQ(a.target_position, inside.target_position);
  EXPECT_NEAR(a.target_yaw, 0.2, 1e-15);

  const Setpoint far{Vec3(11.0, 1.0, 2.0), 1.5 * std::numbers::pi};
  const Setpoint b = clamp_setpoint(far, s, 3.0, bounds);
  EXPECT_EQ(b.target_position, Vec3(4.0, 1.0, 2.0));
  EXPECT_NEAR(b.target_yaw, -0.5 * std::numbers::pi, 1e-15);

  const Setpoint below{Vec3(1.0, 1.0, -1.0), 0.0};
  EXPECT_DOUBLE_EQ(clamp_setpoint(below, s, 3.0, bounds).target_position.z(), 0.0);
}

}  // namespace
}  // namespace racer
