#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "racer/dynamics.hpp"
#include "racer/reward.hpp"

namespace racer {

class TrajectoryLogError : public std::runtime_error {
 public:
  TrajectoryLogError(const std::string& what, long row) : std::runtime_error(what), row_(row) {}
  /// 1-based data row, or 0 for header problems.
  [[nodiscard]] long row() const { return row_; }

 private:
  long row_;
};

/// One drone at the end of one policy step.
struct TrajectoryRecord {
  long step = 0;
  double time = 0.0;
  int drone = 0;
  DroneState state;
  Vec4 action = Vec4::Zero();
  RewardTerms terms;
  double reward = 0.0;
  int next_gate = 0;
  bool gate_pass = false;
  bool collision = false;
  bool lap = false;
};

/// CSV with '#' header lines carrying the format tag, the config hash and the
/// reward weights needed to re-check rewards offline.
class TrajectoryWriter {
 public:
  TrajectoryWriter(std::ostream& os, const std::string& config_hash, const RewardWeights& weights);

  void write(const TrajectoryRecord& rec);
  [[nodiscard]] long rows() const { return rows_; }

 private:
  std::ostream& os_;
  long rows_ = 0;
};

struct TrajectoryLog {
  std::string config_hash;
  RewardWeights weights;
  std::vector<TrajectoryRecord> records;
};

/// Parses and validates a log: every row must have the right column count,
/// per-drone time must not decrease, and each reward must equal the weighted
/// sum of its terms. An empty input yields an empty log.
[[nodiscard]] TrajectoryLog read_trajectory_log(std::istream& is);
[[nodiscard]] TrajectoryLog read_trajectory_log(const std::filesystem::path& path);

struct ReplaySummary {
  long rows = 0;
  std::vector<int> drones;
  std::vector<std::filesystem::path> files;
};

/// Writes per-drone path, speed and reward-breakdown CSVs into `out_dir`.
ReplaySummary export_replay(const TrajectoryLog& log, const std::filesystem::path& out_dir);

}  // namespace racer
