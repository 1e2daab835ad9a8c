#pragma once

#include <optional>

namespace racer {

struct RewardWeights {
  double progress_weight = 1.0;   // w_p
  double collision_weight = 1.0;  // w_c
  double alignment_weight = 1.0;  // w_a
  double progress_scale = 1.0;    // alpha, per meter of centerline progress
  double gate_bonus = 5.0;        // beta, per gate passed
  double collision_penalty = 10.0;
  double alignment_scale = 0.5;                        // zeta
  double alignment_threshold = 0.5235987755982988;     // 30 degrees

  void validate() const;
  bool operator==(const RewardWeights&) const = default;
};

/// Everything that happened to one agent during one policy step.
struct TransitionFacts {
  double progress = 0.0;  ///< centerline progress, m
  int gates_passed = 0;
  bool collision = false;
  double alignment_angle = 0.0;       ///< radians
  std::optional<double> lap_time;     ///< set when a lap completed during the step
};

/// The four reward components before weighting.
struct RewardTerms {
  double progress = 0.0;   ///< alpha * dd + beta * G
  double collision = 0.0;  ///< -C or 0
  double alignment = 0.0;  ///< zeta * max(0, cos(theta) - cos(theta_th))
  double lap_time = 0.0;   ///< 100 / T_lap or 0

  [[nodiscard]] double total(const RewardWeights& w) const {
    return w.progress_weight * progress + w.collision_weight * collision +
           w.alignment_weight * alignment + lap_time;
  }
};

[[nodiscard]] RewardTerms reward_terms(const TransitionFacts& facts, const RewardWeights& w);

[[nodiscard]] inline double compute_reward(const TransitionFacts& facts, const RewardWeights& w) {
  return reward_terms(facts, w).total(w);
}

}  // namespace racer
