#pragma once

#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "racer/policy.hpp"

namespace racer {

/// PPO and advantage-estimation hyperparameters.
struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_epsilon = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double learning_rate = 3e-4;
  int epochs = 10;
  int minibatch_size = 256;
  int rollout_length = 4096;  ///< transitions per update, summed over environments
  int n_envs = 8;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;

  void validate() const;
  bool operator==(const PpoConfig&) const = default;
};

/// One step of the learning agent.
struct Transition {
  Eigen::VectorXd observation;
  Eigen::VectorXd action;  ///< pre-squash Gaussian sample
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

struct AdvantageEstimate {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;  ///< advantages + values
};

/// Generalized advantage estimation over one time-ordered rollout. The
/// bootstrap value is V of the state following the last transition (ignored
/// when that transition is terminal). Advantages are not normalized here.
[[nodiscard]] AdvantageEstimate compute_gae(std::span<const Transition> rollout, double bootstrap_value,
                                            const PpoConfig& cfg);

/// In-place standardization to zero mean and unit variance.
void normalize_advantages(Eigen::VectorXd& advantages);

/// Column-major training batch.
struct Batch {
  Eigen::MatrixXd observations;  ///< obs_dim x N
  Eigen::MatrixXd actions;       ///< action_dim x N, pre-squash
  Eigen::VectorXd log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  [[nodiscard]] Eigen::Index size() const { return observations.cols(); }
  [[nodiscard]] Batch subset(std::span<const Eigen::Index> indices) const;
};

struct LossTerms {
  double total = 0.0;       ///< minimized objective
  double surrogate = 0.0;   ///< mean clipped surrogate
  double value_loss = 0.0;  ///< mean squared value error
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

/// total = -surrogate + value_coef * value_loss - entropy_coef * entropy.
/// When `grad` is non-null it receives d total / d params.
[[nodiscard]] LossTerms ppo_loss(const PolicyParams& params, const Batch& batch, const PpoConfig& cfg,
                                 PolicyParams* grad);

/// Adam over the flattened parameter vector.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
  void reset();

 private:
  double beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

struct UpdateDiagnostics {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double surrogate = 0.0;
  bool aborted = false;  ///< a non-finite loss was hit and the parameters were restored
};

struct UpdateResult {
  PolicyParams params;
  UpdateDiagnostics diagnostics;
};

/// cfg.epochs passes of shuffled minibatch Adam steps on the clipped
/// surrogate. Advantages are standardized per batch when configured.
[[nodiscard]] UpdateResult ppo_update(const PolicyParams& params, Batch batch, const PpoConfig& cfg,
                                      Adam& optimizer, std::mt19937_64& rng);

}  // namespace racer
