#include <cmath>
#include <stdexcept>

#include "racer/ppo.hpp"

namespace racer {

AdvantageEstimate compute_gae(std::span<const Transition> rollout, double bootstrap_value, const PpoConfig& cfg) {
  if (rollout.empty()) throw std::invalid_argument("compute_gae: empty rollout");
  const auto n = static_cast<Eigen::Index>(rollout.size());
  AdvantageEstimate est;
  est.advantages.resize(n);
  est.returns.resize(n);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const Transition& tr = rollout[static_cast<std::size_t>(t)];
    const double live = tr.done ? 0.0 : 1.0;
    const double delta = tr.reward + cfg.gamma * live * next_value - tr.value;
    next_adv = delta + cfg.gamma * cfg.lambda * live * next_adv;
    est.advantages[t] = next_adv;
    est.returns[t] = next_adv + tr.value;
    next_value = tr.value;
  }
  return est;
}

void normalize_advantages(Eigen::VectorXd& a) {
  if (a.size() == 0) return;
  const double mean = a.mean();
  a.array() -= mean;
  const double var = a.size() > 1 ? a.squaredNorm() / static_cast<double>(a.size()) : 0.0;
  a /= std::sqrt(var) + 1e-8;
}

}  // namespace racer
