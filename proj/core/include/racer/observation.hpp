#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "racer/dynamics.hpp"

namespace racer {

using Observation = Eigen::VectorXd;

inline constexpr int kEgoDim = 12;
inline constexpr int kActionDim = 4;
/// Gates are encoded by their horizontal offset only. Every gate of a track
/// sits at the same altitude, so the vertical offset already follows from
/// the ego altitude.
inline constexpr int kGateDim = 2;

struct ObservationConfig {
  int history_length = 50;  ///< K
  int n_opponents = 2;      ///< M_o
  int n_gates = 2;          ///< M_g
  int samples = 5;          ///< snapshots taken from the buffer
  int stride = 10;          ///< steps between sampled snapshots
  bool full_history = false;  ///< flatten all K snapshots instead of sampling
  double position_scale = 10.0;
  double velocity_scale = 10.0;
  double angle_scale = 3.141592653589793;
  double rate_scale = 10.0;

  [[nodiscard]] int snapshot_dim() const { return 3 * n_opponents + kGateDim * n_gates + kActionDim; }
  [[nodiscard]] int sampled_snapshots() const { return full_history ? history_length : samples; }
  [[nodiscard]] int context_dim() const { return sampled_snapshots() * snapshot_dim(); }
  [[nodiscard]] int dimension() const { return kEgoDim + context_dim(); }

  void validate() const;
  bool operator==(const ObservationConfig&) const = default;
};

/// Ring buffer of the last K normalized feature snapshots. Slots that were
/// never written read back as zeros.
class HistoryBuffer {
 public:
  HistoryBuffer() = default;
  HistoryBuffer(int capacity, int snapshot_dim);

  void push(std::span<const double> snapshot);
  void clear();

  /// Snapshot written `age` pushes ago (age 0 is the most recent).
  [[nodiscard]] std::span<const double> at(int age) const;

  [[nodiscard]] int capacity() const { return capacity_; }
  [[nodiscard]] int snapshot_dim() const { return dim_; }
  [[nodiscard]] int size() const { return count_ < capacity_ ? count_ : capacity_; }

 private:
  int capacity_ = 0;
  int dim_ = 0;
  int head_ = 0;  // next write slot
  int count_ = 0;
  std::vector<double> data_;
  std::vector<double> zeros_;
};

/// Raw (unnormalized) features of one snapshot.
struct SnapshotFeatures {
  std::vector<Vec3> opponents;  ///< relative positions, sorted by distance, nearest first
  std::vector<Vec3> gates;      ///< relative positions of upcoming gates (x and y are encoded)
  Vec4 action = Vec4::Zero();   ///< own last normalized action
};

/// Normalizes and zero-pads a snapshot to ObservationConfig::snapshot_dim().
[[nodiscard]] std::vector<double> encode_snapshot(const SnapshotFeatures& f, const ObservationConfig& cfg);

/// Normalized ego state (12 entries).
[[nodiscard]] Eigen::Matrix<double, kEgoDim, 1> encode_ego(const DroneState& s, const ObservationConfig& cfg);

/// concat(ego, f(history)) where f samples the buffer at ages 0, stride, 2*stride, ...
/// Observation entries holding opponent positions, in every sampled snapshot.
[[nodiscard]] std::vector<int> opponent_feature_indices(const ObservationConfig& cfg);

[[nodiscard]] Observation build_observation(const DroneState& ego, const HistoryBuffer& history,
                                            const ObservationConfig& cfg);

}  // namespace racer
