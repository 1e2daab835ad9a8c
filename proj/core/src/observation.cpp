#include "racer/observation.hpp"

#include <algorithm>
#include <stdexcept>

namespace racer {

void ObservationConfig::validate() const {
  if (history_length < 1 || n_opponents < 0 || n_gates < 0 || samples < 1 || stride < 1) {
    throw std::invalid_argument("observation sizes must be positive");
  }
  if (!full_history && (samples - 1) * stride >= history_length) {
    throw std::invalid_argument("observation.samples * stride exceeds the history length");
  }
  if (!(position_scale > 0.0 && velocity_scale > 0.0 && angle_scale > 0.0 && rate_scale > 0.0)) {
    throw std::invalid_argument("observation scales must be positive");
  }
}

HistoryBuffer::HistoryBuffer(int capacity, int snapshot_dim)
    : capacity_(capacity),
      dim_(snapshot_dim),
      data_(static_cast<std::size_t>(capacity) * static_cast<std::size_t>(snapshot_dim), 0.0),
      zeros_(static_cast<std::size_t>(snapshot_dim), 0.0) {
  if (capacity < 1 || snapshot_dim < 1) throw std::invalid_argument("history buffer sizes must be positive");
}

void HistoryBuffer::push(std::span<const double> snapshot) {
  if (static_cast<int>(snapshot.size()) != dim_) throw std::invalid_argument("snapshot dimension mismatch");
  std::copy(snapshot.begin(), snapshot.end(), data_.begin() + static_cast<std::ptrdiff_t>(head_) * dim_);
  head_ = (head_ + 1) % capacity_;
  ++count_;
}

void HistoryBuffer::clear() {
  std::fill(data_.begin(), data_.end(), 0.0);
  head_ = 0;
  count_ = 0;
}

std::span<const double> HistoryBuffer::at(int age) const {
  if (age < 0 || age >= size()) return zeros_;
  const int slot = ((head_ - 1 - age) % capacity_ + capacity_) % capacity_;
  return {data_.data() + static_cast<std::ptrdiff_t>(slot) * dim_, static_cast<std::size_t>(dim_)};
}

std::vector<double> encode_snapshot(const SnapshotFeatures& f, const ObservationConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.snapshot_dim()), 0.0);
  std::size_t k = 0;
  for (int i = 0; i < cfg.n_opponents; ++i, k += 3) {
    if (static_cast<std::size_t>(i) < f.opponents.size()) {
      for (int j = 0; j < 3; ++j) out[k + static_cast<std::size_t>(j)] = f.opponents[static_cast<std::size_t>(i)][j] / cfg.position_scale;
    }
  }
  for (int i = 0; i < cfg.n_gates; ++i, k += kGateDim) {
    if (static_cast<std::size_t>(i) < f.gates.size()) {
      for (int j = 0; j < kGateDim; ++j) out[k + static_cast<std::size_t>(j)] = f.gates[static_cast<std::size_t>(i)][j] / cfg.position_scale;
    }
  }
  for (int j = 0; j < kActionDim; ++j) out[k + static_cast<std::size_t>(j)] = f.action[j];
  return out;
}

Eigen::Matrix<double, kEgoDim, 1> encode_ego(const DroneState& s, const ObservationConfig& cfg) {
  Eigen::Matrix<double, kEgoDim, 1> ego;
  ego << s.position / cfg.position_scale, s.velocity / cfg.velocity_scale,
      s.attitude / cfg.angle_scale, s.body_rates / cfg.rate_scale;
  return ego;
}

Observation build_observation(const DroneState& ego, const HistoryBuffer& history,
                              const ObservationConfig& cfg) {
  Observation obs(cfg.dimension());
  obs.head<kEgoDim>() = encode_ego(ego, cfg);
  const int stride = cfg.full_history ? 1 : cfg.stride;
  const int dim = cfg.snapshot_dim();
  for (int i = 0; i < cfg.sampled_snapshots(); ++i) {
    const auto snap = history.at(i * stride);
    for (int j = 0; j < dim; ++j) obs[kEgoDim + i * dim + j] = snap[static_cast<std::size_t>(j)];
  }
  return obs;
}

std::vector<int> opponent_feature_indices(const ObservationConfig& cfg) {
  std::vector<int> out;
  for (int i = 0; i < cfg.sampled_snapshots(); ++i) {
    for (int j = 0; j < 3 * cfg.n_opponents; ++j) out.push_back(kEgoDim + i * cfg.snapshot_dim() + j);
  }
  return out;
}

}  // namespace racer
