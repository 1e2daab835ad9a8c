#include "racer/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace racer {

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo.gamma must be in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("ppo.lambda must be in [0, 1]");
  if (!(clip_epsilon > 0.0)) throw std::invalid_argument("ppo.clip_epsilon must be positive");
  if (entropy_coef < 0.0 || value_coef < 0.0 || learning_rate < 0.0) {
    throw std::invalid_argument("ppo coefficients must be non-negative");
  }
  if (epochs < 1 || minibatch_size < 1 || rollout_length < 1 || n_envs < 1) {
    throw std::invalid_argument("ppo sizes must be positive");
  }
  if (rollout_length < n_envs) throw std::invalid_argument("ppo.rollout_length must be >= n_envs");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("ppo.max_grad_norm must be positive");
}

Batch Batch::subset(std::span<const Eigen::Index> idx) const {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Batch b;
  b.observations.resize(observations.rows(), n);
  b.actions.resize(actions.rows(), n);
  b.log_probs.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = idx[static_cast<std::size_t>(k)];
    b.observations.col(k) = observations.col(i);
    b.actions.col(k) = actions.col(i);
    b.log_probs[k] = log_probs[i];
    b.advantages[k] = advantages[i];
    b.returns[k] = returns[i];
  }
  return b;
}

LossTerms ppo_loss(const PolicyParams& params, const Batch& batch, const PpoConfig& cfg, PolicyParams* grad) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);

  Mlp::Cache actor_cache, critic_cache;
  const Eigen::MatrixXd mean = params.actor.forward(batch.observations, grad ? &actor_cache : nullptr);
  const Eigen::MatrixXd value = params.critic.forward(batch.observations, grad ? &critic_cache : nullptr);

  const Eigen::VectorXd log_std = params.log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();

  LossTerms terms;
  Eigen::MatrixXd grad_mean(mean.rows(), n);
  Eigen::VectorXd grad_log_std = Eigen::VectorXd::Zero(log_std.size());
  Eigen::MatrixXd grad_value(1, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd u = batch.actions.col(i);
    const Eigen::VectorXd mu = mean.col(i);
    const double log_prob = squashed_log_prob(mu, log_std, u);
    const double ratio = std::exp(log_prob - batch.log_probs[i]);
    const double adv = batch.advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    const double unclipped_obj = ratio * adv;
    const double clipped_obj = clipped * adv;
    const bool take_unclipped = unclipped_obj <= clipped_obj;
    terms.surrogate += std::min(unclipped_obj, clipped_obj);
    terms.mean_ratio += ratio;
    if (std::abs(ratio - 1.0) > cfg.clip_epsilon) terms.clip_fraction += 1.0;

    const double v_err = value(0, i) - batch.returns[i];
    terms.value_loss += v_err * v_err;

    if (grad) {
      // d(-surrogate)/d log_prob
      const double g = take_unclipped ? -ratio * adv * inv_n : 0.0;
      const Eigen::ArrayXd diff = (u - mu).array();
      grad_mean.col(i) = (g * diff * inv_var).matrix();
      grad_log_std.array() += g * (diff.square() * inv_var - 1.0);
      grad_value(0, i) = 2.0 * cfg.value_coef * v_err * inv_n;
    }
  }
  terms.surrogate *= inv_n;
  terms.mean_ratio *= inv_n;
  terms.clip_fraction *= inv_n;
  terms.value_loss *= inv_n;
  terms.entropy = gaussian_entropy(log_std);
  terms.total = -terms.surrogate + cfg.value_coef * terms.value_loss - cfg.entropy_coef * terms.entropy;

  if (grad) {
    *grad = params.zeros_like();
    params.actor.backward(actor_cache, grad_mean, grad->actor);
    params.critic.backward(critic_cache, grad_value, grad->critic);
    grad_log_std.array() -= cfg.entropy_coef;
    for (Eigen::Index d = 0; d < log_std.size(); ++d) {
      const bool inside = params.log_std[d] >= kLogStdMin && params.log_std[d] <= kLogStdMax;
      grad->log_std[d] = inside ? grad_log_std[d] : 0.0;
    }
  }
  return terms;
}

void Adam::reset() {
  m_.resize(0);
  v_.resize(0);
  t_ = 0;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  if (m_.size() != params.size()) {
    m_ = Eigen::VectorXd::Zero(params.size());
    v_ = Eigen::VectorXd::Zero(params.size());
    t_ = 0;
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

UpdateResult ppo_update(const PolicyParams& params, Batch batch, const PpoConfig& cfg, Adam& optimizer,
                        std::mt19937_64& rng) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");
  if (cfg.normalize_advantages) normalize_advantages(batch.advantages);

  UpdateResult result{params, {}};
  Eigen::VectorXd flat = params.to_vector();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto mb = static_cast<Eigen::Index>(cfg.minibatch_size);

  int count = 0;
  PolicyParams grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += mb) {
      const Eigen::Index len = std::min(mb, n - start);
      const Batch minibatch = batch.subset({order.data() + start, static_cast<std::size_t>(len)});
      result.params.from_vector(flat);
      const LossTerms terms = ppo_loss(result.params, minibatch, cfg, &grad);
      Eigen::VectorXd g = grad.to_vector();
      if (!std::isfinite(terms.total) || !g.allFinite()) {
        result.params = params;
        result.diagnostics = {};
        result.diagnostics.aborted = true;
        return result;
      }
      const double norm = g.norm();
      if (norm > cfg.max_grad_norm) g *= cfg.max_grad_norm / norm;
      optimizer.step(flat, g, cfg.learning_rate);

      result.diagnostics.mean_ratio += terms.mean_ratio;
      result.diagnostics.clip_fraction += terms.clip_fraction;
      result.diagnostics.value_loss += terms.value_loss;
      result.diagnostics.entropy += terms.entropy;
      result.diagnostics.surrogate += terms.surrogate;
      ++count;
    }
  }
  result.params.from_vector(flat);
  result.params.clamp_log_std();
  if (!result.params.all_finite()) {
    result.params = params;
    result.diagnostics = {};
    result.diagnostics.aborted = true;
    return result;
  }
  const double inv = 1.0 / count;
  result.diagnostics.mean_ratio *= inv;
  result.diagnostics.clip_fraction *= inv;
  result.diagnostics.value_loss *= inv;
  result.diagnostics.entropy *= inv;
  result.diagnostics.surrogate *= inv;
  return result;
}

}  // namespace racer
