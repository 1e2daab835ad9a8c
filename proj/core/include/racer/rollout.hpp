#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "racer/env.hpp"
#include "racer/pilots.hpp"
#include "racer/ppo.hpp"

namespace racer {

/// Draws the frozen opponents for a new episode.
using OpponentSampler = std::function<std::vector<PilotPtr>(Rng&)>;

struct EpisodeSummary {
  std::int64_t end_step = 0;  ///< learner env-step counter when the episode ended
  double total_reward = 0.0;
  int length = 0;
  int gates_passed = 0;
  bool crashed = false;
  bool finished = false;
};

struct Rollout {
  Batch batch;
  std::vector<EpisodeSummary> episodes;
  int env_steps = 0;
};

/// Runs n_envs independent races and records the transitions of the learning
/// agent (slot 0). Opponents act through frozen pilots and never learn.
/// Each environment owns its generator, so the result does not depend on how
/// environments are scheduled.
class RolloutCollector {
 public:
  RolloutCollector(const RaceEnv& env, int n_envs, int n_agents, std::uint64_t seed);

  /// Collects `steps_per_env` learner transitions from every environment.
  Rollout collect(const PolicyParams& learner, int steps_per_env, const PpoConfig& cfg,
                  const OpponentSampler& sampler);

  [[nodiscard]] std::int64_t total_steps() const { return total_steps_; }

 private:
  struct Slot {
    RaceState race;
    std::vector<PilotPtr> opponents;
    Rng rng;
    double episode_reward = 0.0;
    int episode_length = 0;
    Observation obs;
    bool needs_reset = true;
  };

  void reset_slot(Slot& slot, const OpponentSampler& sampler);

  const RaceEnv& env_;
  int n_agents_;
  std::vector<Slot> slots_;
  std::int64_t total_steps_ = 0;
};

}  // namespace racer
