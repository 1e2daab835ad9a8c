#pragma once

#include <memory>
#include <random>
#include <string>

#include "racer/env.hpp"
#include "racer/policy.hpp"

namespace racer {

using Rng = std::mt19937_64;

/// Anything that can fly a drone in a race: a trained policy, a random
/// policy or a scripted controller. Implementations are immutable so one
/// instance can fly any number of drones and races.
class Pilot {
 public:
  virtual ~Pilot() = default;

  [[nodiscard]] virtual Setpoint act(const RaceEnv& env, const RaceState& race, int agent,
                                     const Observation& obs, Rng& rng) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

using PilotPtr = std::shared_ptr<const Pilot>;

/// Flies a policy network. Deterministic mode uses tanh(mean).
class PolicyPilot final : public Pilot {
 public:
  PolicyPilot(std::shared_ptr<const PolicyParams> params, bool deterministic, std::string label = "policy");

  Setpoint act(const RaceEnv& env, const RaceState& race, int agent, const Observation& obs,
               Rng& rng) const override;
  std::string name() const override { return label_; }
  [[nodiscard]] const PolicyParams& params() const { return *params_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
  bool deterministic_;
  std::string label_;
};

/// Uniformly random normalized actions.
class RandomPilot final : public Pilot {
 public:
  Setpoint act(const RaceEnv& env, const RaceState& race, int agent, const Observation& obs,
               Rng& rng) const override;
  std::string name() const override { return "random"; }
};

/// Holds the current position and yaw.
class HoverPilot final : public Pilot {
 public:
  Setpoint act(const RaceEnv& env, const RaceState& race, int agent, const Observation& obs,
               Rng& rng) const override;
  std::string name() const override { return "hover"; }
};

/// Steers into the top bar of its next gate.
class CrashPilot final : public Pilot {
 public:
  Setpoint act(const RaceEnv& env, const RaceState& race, int agent, const Observation& obs,
               Rng& rng) const override;
  std::string name() const override { return "crash"; }
};

/// Follows the centerline at a fixed cruise speed. The carrot point moves
/// along the straight line into the next gate and continues straight through
/// it until the gate registers, so gates are crossed near their centers.
class CenterlinePilot final : public Pilot {
 public:
  explicit CenterlinePilot(double speed = 1.5) : speed_(speed) {}

  Setpoint act(const RaceEnv& env, const RaceState& race, int agent, const Observation& obs,
               Rng& rng) const override;
  std::string name() const override { return "scripted"; }
  [[nodiscard]] double speed() const { return speed_; }

 private:
  double speed_;
};

}  // namespace racer
