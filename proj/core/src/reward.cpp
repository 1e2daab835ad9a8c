#include "racer/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace racer {

void RewardWeights::validate() const {
  if (progress_weight < 0.0 || collision_weight < 0.0 || alignment_weight < 0.0 ||
      progress_scale < 0.0 || gate_bonus < 0.0 || alignment_scale < 0.0 ||
      alignment_threshold < 0.0) {
    throw std::invalid_argument("reward weights must be non-negative");
  }
  if (!(collision_penalty > 0.0)) throw std::invalid_argument("collision penalty must be positive");
}

RewardTerms reward_terms(const TransitionFacts& f, const RewardWeights& w) {
  RewardTerms t;
  t.progress = w.progress_scale * f.progress + w.gate_bonus * f.gates_passed;
  t.collision = f.collision ? -w.collision_penalty : 0.0;
  t.alignment = w.alignment_scale *
                std::max(0.0, std::cos(f.alignment_angle) - std::cos(w.alignment_threshold));
  if (f.lap_time) t.lap_time = 100.0 / *f.lap_time;
  return t;
}

}  // namespace racer
