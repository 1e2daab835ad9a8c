#pragma once

#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "racer/network.hpp"
#include "racer/observation.hpp"

namespace racer {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct NetworkConfig {
  std::vector<int> hidden = {128, 128};
  double hidden_gain = 1.4142135623730951;
  double actor_output_gain = 0.01;
  double critic_output_gain = 1.0;
  double initial_log_std = -0.5;

  bool operator==(const NetworkConfig&) const = default;
};

/// Separate actor and critic networks plus a state-independent log-std.
/// The actor outputs the pre-squash Gaussian mean.
struct PolicyParams {
  Mlp actor;
  Eigen::VectorXd log_std;
  Mlp critic;

  [[nodiscard]] int observation_dim() const { return actor.input_dim(); }
  [[nodiscard]] int action_dim() const { return actor.output_dim(); }

  [[nodiscard]] Eigen::Index num_params() const;
  /// Flattened as actor, log_std, critic.
  [[nodiscard]] Eigen::VectorXd to_vector() const;
  void from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
  [[nodiscard]] PolicyParams zeros_like() const;
  [[nodiscard]] bool all_finite() const;
  void clamp_log_std();

  bool operator==(const PolicyParams&) const = default;
};

[[nodiscard]] PolicyParams make_policy(int observation_dim, int action_dim, const NetworkConfig& cfg,
                                       std::mt19937_64& rng);

/// Zeroes the first-layer weights reading the given inputs, in actor and
/// critic, so those inputs have no effect until training moves them.
void detach_inputs(PolicyParams& params, std::span<const int> inputs);

/// make_policy for a race observation, with the opponent inputs detached. A
/// policy trained solo never sees opponents, and random weights on those
/// inputs would otherwise perturb it once opponents appear.
[[nodiscard]] PolicyParams make_race_policy(const ObservationConfig& obs, const NetworkConfig& cfg,
                                            std::mt19937_64& rng);

/// All-zero parameters of the given shape.
[[nodiscard]] PolicyParams zero_policy(int observation_dim, int action_dim, const std::vector<int>& hidden);

struct PolicyOutput {
  Eigen::VectorXd mean;     ///< pre-squash Gaussian mean
  Eigen::VectorXd log_std;  ///< clamped to [kLogStdMin, kLogStdMax]
  double value = 0.0;

  /// Deterministic action: the mean of tanh(u) with u ~ N(mean, exp(log_std)).
  /// tanh(mean) overshoots it whenever the spread is wide.
  [[nodiscard]] Eigen::VectorXd squashed_mean() const;
};

/// Throws std::invalid_argument on an observation dimension mismatch.
[[nodiscard]] PolicyOutput policy_forward(const PolicyParams& params, const Eigen::VectorXd& obs);

struct SampledAction {
  Eigen::VectorXd action;     ///< tanh(pre_squash), in (-1, 1)
  Eigen::VectorXd pre_squash; ///< Gaussian sample
  double log_prob = 0.0;      ///< density of `action`, including the tanh correction
};

[[nodiscard]] SampledAction sample_action(const PolicyParams& params, const Eigen::VectorXd& obs,
                                          std::mt19937_64& rng);

/// Log density of the Gaussian sample u, without the squashing correction.
[[nodiscard]] double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                       const Eigen::VectorXd& u);

/// log |d tanh(u) / du| summed over dimensions, computed stably.
[[nodiscard]] double tanh_log_det_jacobian(const Eigen::VectorXd& u);

/// Log density of tanh(u) under the squashed Gaussian.
[[nodiscard]] double squashed_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                       const Eigen::VectorXd& u);

/// Differential entropy of the unsquashed Gaussian.
[[nodiscard]] double gaussian_entropy(const Eigen::VectorXd& log_std);

/// Differential entropy of the squashed Gaussian, by quadrature in each dimension.
[[nodiscard]] double squashed_entropy(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std);

}  // namespace racer
