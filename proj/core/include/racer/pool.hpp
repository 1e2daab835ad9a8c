#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "racer/observation.hpp"
#include "racer/policy.hpp"

namespace racer {

class PoolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation metrics recorded when a version is saved.
struct PoolMetrics {
  int stage = 1;
  long long step = 0;  ///< learner env steps within the stage
  double win_rate = 0.0;
  double success_ratio = 0.0;
  std::optional<double> mean_lap_time;

  bool operator==(const PoolMetrics&) const = default;
};

struct PoolEntry {
  int version = 0;
  std::shared_ptr<const PolicyParams> params;
  PoolMetrics metrics;
};

/// Append-only archive of best policies. With a directory attached, every
/// append writes policy_vNNNN.ckpt and rewrites manifest.json before the
/// in-memory state changes, so a failed write leaves both consistent.
class CheckpointPool {
 public:
  /// In-memory pool.
  CheckpointPool() = default;
  /// Empty persistent pool; fails if `dir` already holds a manifest.
  CheckpointPool(std::filesystem::path dir, std::string config_hash, const ObservationConfig& obs = {});

  /// Loads an existing pool. A non-empty `expected_hash` must match the manifest.
  static CheckpointPool open(const std::filesystem::path& dir, const std::string& expected_hash = "");
  static bool exists(const std::filesystem::path& dir);

  /// Appends a new best version and returns its id.
  int append(const PolicyParams& params, const PoolMetrics& metrics);

  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] int size() const { return static_cast<int>(entries_.size()); }
  [[nodiscard]] const std::vector<PoolEntry>& entries() const { return entries_; }
  [[nodiscard]] const PoolEntry& best() const;
  [[nodiscard]] int best_version() const { return best_version_; }
  [[nodiscard]] const std::string& config_hash() const { return config_hash_; }
  [[nodiscard]] const std::optional<std::filesystem::path>& directory() const { return dir_; }

  [[nodiscard]] static std::string checkpoint_name(int version);
  [[nodiscard]] std::filesystem::path checkpoint_path(int version) const;

 private:
  void write_manifest(const std::vector<PoolEntry>& entries, int best) const;

  std::optional<std::filesystem::path> dir_;
  std::string config_hash_;
  ObservationConfig obs_;
  std::vector<PoolEntry> entries_;
  int best_version_ = 0;
};

}  // namespace racer
