#include "racer/pilots.hpp"

#include <cmath>

namespace racer {

PolicyPilot::PolicyPilot(std::shared_ptr<const PolicyParams> params, bool deterministic, std::string label)
    : params_(std::move(params)), deterministic_(deterministic), label_(std::move(label)) {}

Setpoint PolicyPilot::act(const RaceEnv& env, const RaceState& race, int agent, const Observation& obs,
                          Rng& rng) const {
  Vec4 a;
  if (deterministic_) {
    a = policy_forward(*params_, obs).squashed_mean();
  } else {
    a = sample_action(*params_, obs, rng).action;
  }
  return action_to_setpoint(a, race.agents[static_cast<std::size_t>(agent)].drone,
                            env.config().episode.max_offset);
}

Setpoint RandomPilot::act(const RaceEnv& env, const RaceState& race, int agent, const Observation&,
                          Rng& rng) const {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec4 a;
  for (int i = 0; i < 4; ++i) a[i] = unit(rng);
  return action_to_setpoint(a, race.agents[static_cast<std::size_t>(agent)].drone,
                            env.config().episode.max_offset);
}

Setpoint HoverPilot::act(const RaceEnv&, const RaceState& race, int agent, const Observation&, Rng&) const {
  const DroneState& s = race.agents[static_cast<std::size_t>(agent)].drone;
  return {s.position, s.attitude.z()};
}

Setpoint CrashPilot::act(const RaceEnv& env, const RaceState& race, int agent, const Observation&, Rng&) const {
  const AgentState& a = race.agents[static_cast<std::size_t>(agent)];
  const Gate& g = env.track().gate(a.next_gate);
  return {g.center + g.v_axis() * (g.half_height + 0.5 * g.frame_thickness), a.drone.attitude.z()};
}

Setpoint CenterlinePilot::act(const RaceEnv& env, const RaceState& race, int agent, const Observation&,
                              Rng&) const {
  const AgentState& a = race.agents[static_cast<std::size_t>(agent)];
  const Track& track = env.track();
  const PidGains& gains = env.config().gains;

  // Line from the previous gate into the next one, extended past the gate.
  const int segment = track.wrap_index(a.next_gate - 1);
  const Vec3 start = track.gate(segment).center;
  const Vec3 dir = track.segment_direction(segment);
  const double along = (a.drone.position - start).dot(dir);

  // With PD position control the steady-state cruise speed is
  // kp * lead / kd, so this lead yields the requested speed.
  const double lead = speed_ * gains.position_d.x() / gains.position_p.x();
  Setpoint sp;
  sp.target_position = start + dir * (along + lead);
  sp.target_yaw = std::atan2(dir.y(), dir.x());
  return sp;
}

}  // namespace racer
