#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "racer/control.hpp"
#include "racer/dynamics.hpp"
#include "racer/observation.hpp"
#include "racer/reward.hpp"
#include "racer/track.hpp"

namespace racer {

struct EpisodeConfig {
  int laps = 2;
  double timeout = 60.0;  ///< simulated seconds
  int substeps = 5;       ///< physics ticks per policy step (240 Hz / 5 = 48 Hz)
  double max_offset = 3.0;  ///< half-width of the setpoint box around the drone, m
  double start_distance = 1.5;  ///< distance of the start area before gate 0, m
  double start_longitudinal_jitter = 0.5;
  double start_lateral_jitter = 0.8;
  double start_vertical_jitter = 0.2;

  void validate() const;
  bool operator==(const EpisodeConfig&) const = default;
};

struct EnvConfig {
  DroneParams drone;
  PidGains gains;
  TrackLayout track;
  RewardWeights reward;
  ObservationConfig observation;
  EpisodeConfig episode;

  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

/// Per-drone race bookkeeping.
struct AgentState {
  DroneState drone;
  ControllerState controller;
  HistoryBuffer history;
  Vec4 last_action = Vec4::Zero();
  int team = 0;
  int next_gate = 0;
  double arc = 0.0;
  int laps_completed = 0;
  double lap_start_time = 0.0;
  int gates_passed = 0;
  int collisions = 0;
  bool crashed = false;
  bool finished = false;
  std::optional<double> first_lap_time;
  std::optional<double> finish_time;  ///< sim time at which the required laps were completed

  [[nodiscard]] bool active() const { return !crashed && !finished; }
};

struct RaceState {
  std::vector<AgentState> agents;
  double sim_time = 0.0;
  int steps = 0;
  bool timed_out = false;

  [[nodiscard]] bool all_done() const;
};

/// Outcome of one policy step for one agent.
struct AgentStep {
  Observation observation;
  TransitionFacts facts;
  RewardTerms terms;
  double reward = 0.0;
  bool done = false;
  bool acted = false;  ///< false when the agent was already done before the step
  bool gate_event = false;
  bool lap_event = false;
};

struct StepResult {
  std::vector<AgentStep> agents;
};

/// Maps a normalized action in [-1, 1]^4 to a setpoint relative to the drone.
[[nodiscard]] Setpoint action_to_setpoint(const Vec4& action, const DroneState& state, double max_offset);

/// Multi-drone race on a gate circuit. The environment itself is immutable;
/// all mutable state lives in RaceState.
class RaceEnv {
 public:
  explicit RaceEnv(EnvConfig cfg);

  [[nodiscard]] const EnvConfig& config() const { return cfg_; }
  [[nodiscard]] const Track& track() const { return track_; }
  [[nodiscard]] int observation_dim() const { return cfg_.observation.dimension(); }

  /// Places n_agents (1, 2 or 4) on the start area before gate 0 and records
  /// their first snapshot.
  [[nodiscard]] RaceState reset(int n_agents, std::uint64_t placement_seed) const;

  /// Agent with the given physical state, hovering and ready to race.
  [[nodiscard]] AgentState make_agent(const DroneState& drone, int team = 0) const;

  /// Holds each setpoint for `substeps` physics ticks and returns per-agent
  /// observations, rewards and done flags. Setpoints of finished or crashed
  /// agents are ignored.
  StepResult step(RaceState& race, std::span<const Setpoint> setpoints) const;

  [[nodiscard]] Observation observe(const RaceState& race, int agent) const;

  /// Unsigned angle between the drone heading and the direction to its next gate.
  [[nodiscard]] double alignment_angle(const AgentState& agent) const;

 private:
  [[nodiscard]] std::vector<double> snapshot(const RaceState& race, int agent) const;
  [[nodiscard]] bool hits_environment(const Vec3& position) const;

  EnvConfig cfg_;
  Track track_;
};

}  // namespace racer
