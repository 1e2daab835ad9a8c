#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "racer/env.hpp"
#include "racer/pilots.hpp"

namespace racer {

class TrajectoryWriter;

enum class Scenario { kSolo, kOneVsOne, kTwoVsTwo };

[[nodiscard]] int scenario_agents(Scenario s);
[[nodiscard]] std::string to_string(Scenario s);
/// Accepts "solo", "1v1", "2v2"; throws std::invalid_argument otherwise.
[[nodiscard]] Scenario parse_scenario(const std::string& s);
[[nodiscard]] Scenario scenario_for_agents(int n_agents);

class EvalConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DroneRecord {
  std::string pilot;
  int team = 0;
  std::optional<double> lap_time;  ///< mean lap time of a finished run
  std::optional<double> finish_time;
  bool success = false;  ///< all gates in order, zero collisions
  int collisions = 0;
  int gates_passed = 0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<DroneRecord> drones;
  /// Team of the first finisher. Without finishers, the only team with a
  /// drone that did not crash wins. Otherwise -1 (draw).
  int winner_team = -1;
};

/// Runs one race to completion. Pilots are indexed by slot; `laps` overrides
/// the configured episode length. A non-null writer receives one record per
/// drone per policy step.
[[nodiscard]] RunRecord run_race(const EnvConfig& env_cfg, std::span<const PilotPtr> pilots, int laps,
                                 std::uint64_t seed, TrajectoryWriter* writer = nullptr);

struct LapStats {
  int samples = 0;
  std::optional<double> mean;
  std::optional<double> stddev;  ///< sample (n-1) standard deviation
};

[[nodiscard]] LapStats lap_stats(std::span<const double> lap_times);

struct SlotReport {
  std::string label;
  int team = 0;
  int successes = 0;
  double success_ratio = 0.0;
  LapStats lap;
};

/// Per-team aggregation. `per_drone` pools every drone of the team (the
/// default reported number); `team_best` takes the team's best finisher per run.
struct TeamReport {
  int team = 0;
  double per_drone_success_ratio = 0.0;
  LapStats per_drone_lap;
  double team_best_success_ratio = 0.0;
  LapStats team_best_lap;
  int wins = 0;
};

struct EvalReport {
  Scenario scenario = Scenario::kSolo;
  int n_runs = 0;
  int laps = 1;
  std::uint64_t base_seed = 0;
  std::string config_hash;
  std::vector<SlotReport> slots;
  std::vector<TeamReport> teams;
  int draws = 0;

  [[nodiscard]] std::string to_table() const;
  [[nodiscard]] std::string to_json() const;
};

struct EvalConfig {
  int n_runs = 50;
  Scenario scenario = Scenario::kSolo;
  /// One source per slot: a checkpoint path, "random", "scripted[:speed]", "hover" or "crash".
  std::vector<std::string> slots;
  std::uint64_t base_seed = 0;
  int laps = 1;

  void validate() const;
};

struct EvalResult {
  std::vector<RunRecord> records;
  EvalReport report;
};

/// Resolves a slot source to a pilot. Checkpoints must carry `config_hash`
/// unless it is empty. Throws EvalConfigError.
[[nodiscard]] PilotPtr make_pilot(const std::string& source, const EnvConfig& env_cfg,
                                  const std::string& config_hash);

/// Aggregates run records into a report.
[[nodiscard]] EvalReport summarize(std::span<const RunRecord> records, const EvalConfig& cfg,
                                   std::span<const std::string> labels, const std::string& config_hash);

/// Runs cfg.n_runs races with seeds base_seed + i. All pilots are resolved
/// before the first race.
[[nodiscard]] EvalResult run_evaluation(const EvalConfig& cfg, const EnvConfig& env_cfg,
                                        const std::string& config_hash);

/// Same as above with pre-built pilots (one per slot).
[[nodiscard]] EvalResult run_evaluation(const EvalConfig& cfg, const EnvConfig& env_cfg,
                                        std::span<const PilotPtr> pilots, const std::string& config_hash);

struct MatchResult {
  int wins = 0;
  int draws = 0;
  int losses = 0;
  std::vector<RunRecord> records;
  std::vector<double> lap_times_a;  ///< lap times of pilot A's drones in successful runs

  [[nodiscard]] double win_rate() const;
};

/// Team races of pilot A against pilot B with `n_agents` drones (2 or 4,
/// split evenly). Runs come in mirrored pairs: run 2k and 2k+1 share a start
/// layout and swap which team each pilot flies.
[[nodiscard]] MatchResult head_to_head(const EnvConfig& env_cfg, const PilotPtr& a, const PilotPtr& b,
                                       int n_runs, std::uint64_t seed, int n_agents = 2, int laps = 1);

/// Success ratio and lap statistics of a pilot flying alone.
struct SoloResult {
  int successes = 0;
  int runs = 0;
  LapStats lap;

  [[nodiscard]] double success_ratio() const { return runs ? static_cast<double>(successes) / runs : 0.0; }
};

[[nodiscard]] SoloResult solo_runs(const EnvConfig& env_cfg, const PilotPtr& pilot, int n_runs, std::uint64_t seed,
                                   int laps = 1);

/// Formats "mean ± std" with four decimals, or "n/a".
[[nodiscard]] std::string format_mean_std(const LapStats& s);

/// Writes records one row per drone per run.
void write_records_csv(std::ostream& os, std::span<const RunRecord> records);

}  // namespace racer
