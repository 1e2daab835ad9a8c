#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "racer/env.hpp"
#include "racer/pilots.hpp"
#include "racer/pool.hpp"
#include "racer/ppo.hpp"
#include "racer/rollout.hpp"

namespace racer {

struct StageConfig {
  int stage = 1;  ///< 1 solo, 2 head-to-head, 3 two versus two
  long long budget = 200000;        ///< learner env steps
  long long eval_interval = 50000;  ///< env steps between evaluation gates
  int n_eval = 20;
  double win_threshold = 0.55;
  double p_latest = 0.8;
  /// Stage ends early once a gate reaches this solo success ratio; negative disables.
  double promotion_success_ratio = -1.0;

  [[nodiscard]] int n_agents() const { return stage == 1 ? 1 : (stage == 2 ? 2 : 4); }
  void validate() const;
  bool operator==(const StageConfig&) const = default;
};

/// Where the learner's opponents come from.
enum class OpponentMode {
  kSelfPlay,     ///< sampled from the checkpoint pool
  kFixedRandom,  ///< uniformly random pilots (the no-self-play baseline)
};

/// Draws n_agents - 1 frozen opponents: the current best with probability
/// p_latest, otherwise a uniformly chosen version. Returns versions.
/// Throws std::logic_error on an empty pool in stages 2 and 3.
[[nodiscard]] std::vector<int> sample_opponent_versions(const CheckpointPool& pool, const StageConfig& stage,
                                                        Rng& rng);
[[nodiscard]] std::vector<PilotPtr> sample_opponents(const CheckpointPool& pool, const StageConfig& stage, Rng& rng);

struct EvalGateResult {
  double win_rate = 0.0;  ///< stage 1: the candidate's solo success ratio
  std::optional<double> mean_lap_time;
  double success_ratio = 0.0;
  bool improved = false;
  int wins = 0;
  int draws = 0;
  int losses = 0;
};

/// Stage 1 compares solo success ratio, then mean lap time, against the pool
/// best on the same seeds, and never accepts a success ratio below the one
/// recorded for a stage-1 best. Stages 2 and 3 race the candidate against the
/// pool best in mirrored pairs; improved means win_rate > win_threshold.
/// An empty pool accepts any candidate.
[[nodiscard]] EvalGateResult evaluation_gate(const PolicyParams& candidate, const CheckpointPool& pool,
                                             const StageConfig& stage, const EnvConfig& env_cfg,
                                             std::uint64_t seed);

/// Appends the candidate when the gate reported an improvement. Returns
/// whether the pool changed.
bool update_pool(CheckpointPool& pool, const PolicyParams& candidate, const EvalGateResult& result, int stage,
                 long long step);

struct TrainingLogEntry {
  long long step = 0;
  int episodes = 0;
  std::optional<double> mean_episode_reward;  ///< episodes that ended in this iteration
  double mean_episode_length = 0.0;
  double finished_fraction = 0.0;
  UpdateDiagnostics update;
  std::optional<EvalGateResult> gate;
  int pool_size = 0;
  int best_version = 0;
};

struct StageResult {
  PolicyParams policy;
  std::vector<TrainingLogEntry> log;
  std::vector<EpisodeSummary> episodes;
  long long steps = 0;
  bool promoted = false;
  bool collapsed = false;
  std::string diagnostic;
};

using StageProgress = std::function<void(const TrainingLogEntry&)>;

/// Runs one curriculum stage: sample opponents, collect rollouts, update,
/// and gate into the pool every eval_interval steps, until the budget is
/// spent or the promotion criterion is met. A non-finite update restores the
/// pool best (or the previous parameters) and halts the stage.
[[nodiscard]] StageResult run_stage(const StageConfig& stage, const PolicyParams& initial, CheckpointPool& pool,
                                    const PpoConfig& ppo, const EnvConfig& env_cfg, std::uint64_t seed,
                                    OpponentMode mode = OpponentMode::kSelfPlay,
                                    const StageProgress& progress = {});

/// Makes `policy` the pool best before a stage that races against the pool.
/// Skipped when it already is the best. Returns whether the pool changed.
bool seed_pool(CheckpointPool& pool, const PolicyParams& policy, const EnvConfig& env_cfg, int n_eval,
               int stage, std::uint64_t seed);

/// CSV header and row for a training log entry.
[[nodiscard]] std::string training_log_header();
[[nodiscard]] std::string training_log_row(int stage, const TrainingLogEntry& e);

/// Mean reward of episodes ending in [lo, hi) env steps; nullopt if none.
[[nodiscard]] std::optional<double> mean_episode_reward(const std::vector<EpisodeSummary>& episodes, long long lo,
                                                        long long hi);

}  // namespace racer
