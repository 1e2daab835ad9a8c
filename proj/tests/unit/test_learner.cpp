#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "racer/policy.hpp"
#include "racer/ppo.hpp"

namespace racer {
namespace {

// Advantage of step t as the explicit discounted sum of TD errors, stopping
// at the first terminal step.
double brute_force_advantage(const std::vector<Transition>& r, double bootstrap, double gamma, double lambda,
                             std::size_t t) {
  double sum = 0.0, weight = 1.0;
  for (std::size_t k = t; k < r.size(); ++k) {
    const double next_value = k + 1 < r.size() ? r[k + 1].value : bootstrap;
    const double delta = r[k].reward + (r[k].done ? 0.0 : gamma * next_value) - r[k].value;
    sum += weight * delta;
    if (r[k].done) break;
    weight *= gamma * lambda;
  }
  return sum;
}

TEST(Gae, MatchesBruteForceOnRandomRollouts) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    PpoConfig cfg;
    cfg.gamma = 0.5 + 0.5 * p(rng);
    cfg.lambda = p(rng);
    const int len = 1 + trial % 10;
    std::vector<Transition> rollout(static_cast<std::size_t>(len));
    for (Transition& t : rollout) {
      t.reward = u(rng);
      t.value = u(rng);
      t.done = p(rng) < 0.2;
    }
    const double bootstrap = u(rng);
    const AdvantageEstimate est = compute_gae(rollout, bootstrap, cfg);
    ASSERT_EQ(est.advantages.size(), len);
    for (std::size_t t = 0; t < rollout.size(); ++t) {
      const double expected = brute_force_advantage(rollout, bootstrap, cfg.gamma, cfg.lambda, t);
      ASSERT_NEAR(est.advantages[static_cast<Eigen::Index>(t)], expected, 1e-10);
      ASSERT_NEAR(est.returns[static_cast<Eigen::Index>(t)], expected + rollout[t].value, 1e-10);
    }
  }
}

TEST(Gae, NormalizationGivesZeroMeanUnitVariance) {
  Eigen::VectorXd a(5);
  a << 1.0, 2.0, 3.0, 4.0, 10.0;
  normalize_advantages(a);
  EXPECT_NEAR(a.mean(), 0.0, 1e-12);
  EXPECT_NEAR((a.array() - a.mean()).square().sum() / (a.size() - 1), 1.0, 0.3);
  EXPECT_NEAR(std::sqrt(a.array().square().mean()), 1.0, 1e-6);
}

// Actor 1-2-1 (7 parameters), one log-std and a linear critic (2): ten in all.
PolicyParams toy_policy(std::mt19937_64& rng) {
  NetworkConfig net;
  net.hidden = {2};
  net.actor_output_gain = 1.0;
  PolicyParams p = make_policy(1, 1, net, rng);
  p.critic = Mlp::orthogonal({1, 1}, 1.0, 1.0, rng);
  std::normal_distribution<double> n(0.0, 0.3);
  Eigen::VectorXd v = p.to_vector();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += n(rng);
  p.from_vector(v);
  return p;
}

Batch toy_batch(const PolicyParams& behaviour, std::mt19937_64& rng, int n) {
  Batch b;
  b.observations.resize(1, n);
  b.actions.resize(1, n);
  b.log_probs.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd obs(1);
    obs << g(rng);
    const SampledAction s = sample_action(behaviour, obs, rng);
    b.observations.col(i) = obs;
    b.actions.col(i) = s.pre_squash;
    b.log_probs[i] = s.log_prob;
    b.advantages[i] = g(rng);
    b.returns[i] = g(rng);
  }
  return b;
}

TEST(Ppo, AnalyticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  const PolicyParams params = toy_policy(rng);
  ASSERT_EQ(params.num_params(), 10);
  // Behaviour policy close to the current one keeps ratios inside the clip
  // range, away from the kinks of the clipped objective.
  PolicyParams behaviour = params;
  Eigen::VectorXd bv = behaviour.to_vector();
  bv.array() += 0.01;
  behaviour.from_vector(bv);
  const Batch batch = toy_batch(behaviour, rng, 64);
  const PpoConfig cfg;

  PolicyParams grad;
  (void)ppo_loss(params, batch, cfg, &grad);
  const Eigen::VectorXd analytic = grad.to_vector();

  const Eigen::VectorXd x0 = params.to_vector();
  Eigen::VectorXd numeric(x0.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    PolicyParams plus = params, minus = params;
    Eigen::VectorXd xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    plus.from_vector(xp);
    minus.from_vector(xm);
    numeric[i] = (ppo_loss(plus, batch, cfg, nullptr).total - ppo_loss(minus, batch, cfg, nullptr).total) / (2 * h);
  }
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double scale = std::max(std::abs(numeric[i]), 1e-3);
    EXPECT_LT(std::abs(analytic[i] - numeric[i]) / scale, 1e-4) << "parameter " << i;
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  const Mlp net = Mlp::orthogonal({3, 4, 2}, 1.4, 1.0, rng);
  Eigen::MatrixXd x(3, 5);
  x.setRandom();
  Eigen::MatrixXd w(2, 5);
  w.setRandom();
  Mlp::Cache cache;
  (void)net.forward(x, &cache);
  Mlp grads = net.zeros_like();
  net.backward(cache, w, grads);
  Eigen::VectorXd analytic(net.num_params()), x0(net.num_params());
  grads.write_params(analytic);
  net.write_params(x0);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Mlp p = net, m = net;
    Eigen::VectorXd xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    p.read_params(xp);
    m.read_params(xm);
    const double fd = ((p.forward(x, nullptr).array() * w.array()).sum() -
                       (m.forward(x, nullptr).array() * w.array()).sum()) / (2 * h);
    EXPECT_NEAR(analytic[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Ppo, ZeroLearningRateIsIdentity) {
  std::mt19937_64 rng(5);
  const PolicyParams params = make_policy(6, 4, NetworkConfig{.hidden = {8, 8}}, rng);
  Batch b;
  b.observations = Eigen::MatrixXd::Random(6, 40);
  b.actions = Eigen::MatrixXd::Random(4, 40);
  b.log_probs = Eigen::VectorXd::Random(40);
  b.advantages = Eigen::VectorXd::Random(40);
  b.returns = Eigen::VectorXd::Random(40);
  PpoConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.minibatch_size = 16;
  Adam adam;
  const UpdateResult r = ppo_update(params, b, cfg, adam, rng);
  EXPECT_FALSE(r.diagnostics.aborted);
  EXPECT_EQ(r.params, params);
}

TEST(Ppo, UpdateImprovesSurrogateOnFixedBatch) {
  std::mt19937_64 rng(6);
  const PolicyParams params = make_policy(3, 2, NetworkConfig{.hidden = {16}}, rng);
  Batch b;
  b.observations = Eigen::MatrixXd::Random(3, 256);
  b.actions.resize(2, 256);
  b.log_probs.resize(256);
  for (Eigen::Index i = 0; i < 256; ++i) {
    const SampledAction s = sample_action(params, b.observations.col(i), rng);
    b.actions.col(i) = s.pre_squash;
    b.log_probs[i] = s.log_prob;
  }
  // Reward actions whose first component is positive.
  b.advantages = (b.actions.row(0).array() > 0.0).cast<double>().matrix().transpose();
  b.returns = b.advantages;
  PpoConfig cfg;
  cfg.epochs = 4;
  cfg.minibatch_size = 64;
  cfg.normalize_advantages = true;
  Adam adam;
  const UpdateResult r = ppo_update(params, b, cfg, adam, rng);
  Batch normalized = b;
  normalize_advantages(normalized.advantages);
  EXPECT_GT(ppo_loss(r.params, normalized, cfg, nullptr).surrogate, ppo_loss(params, normalized, cfg, nullptr).surrogate);
}

TEST(Policy, SquashedLogProbIncludesJacobian) {
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(1, 0.3);
  const Eigen::VectorXd log_std = Eigen::VectorXd::Constant(1, -0.2);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.8);
  const double sigma = std::exp(-0.2);
  const double gauss = -0.5 * std::pow((0.8 - 0.3) / sigma, 2) - std::log(sigma) - 0.5 * std::log(2 * std::numbers::pi);
  const double expected = gauss - std::log(1.0 - std::pow(std::tanh(0.8), 2));
  EXPECT_NEAR(squashed_log_prob(mean, log_std, u), expected, 1e-12);
}

TEST(Policy, ForwardIsDeterministicAndBounded) {
  std::mt19937_64 rng(1);
  const PolicyParams p = make_policy(82, 4, NetworkConfig{}, rng);
  const Eigen::VectorXd obs = Eigen::VectorXd::Random(82);
  const PolicyOutput a = policy_forward(p, obs), b = policy_forward(p, obs);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.value, b.value);
  EXPECT_TRUE((a.squashed_mean().array().abs() < 1.0).all());
  EXPECT_THROW((void)policy_forward(p, Eigen::VectorXd::Zero(81)), std::invalid_argument);
}

TEST(Policy, SquashedMeanIsMeanOfSquashedSamples) {
  PolicyOutput out;
  out.mean = (Eigen::VectorXd(4) << 0.0, 0.4, -1.5, 3.0).finished();
  out.log_std = (Eigen::VectorXd(4) << 0.5, -0.5, 0.0, -6.0).finished();
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr int kSamples = 400000;
  Eigen::VectorXd mc = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < kSamples; ++i) {
    for (int d = 0; d < 4; ++d) mc[d] += std::tanh(out.mean[d] + std::exp(out.log_std[d]) * normal(rng));
  }
  mc /= kSamples;
  const Eigen::VectorXd a = out.squashed_mean();
  for (int d = 0; d < 4; ++d) EXPECT_NEAR(a[d], mc[d], 3e-3) << d;
  EXPECT_NEAR(a[0], 0.0, 1e-15);
  // Narrow spread: tanh(mean).
  EXPECT_NEAR(a[3], std::tanh(3.0), 1e-6);
  // Wide spread pulls the mean toward zero.
  EXPECT_LT(std::abs(a[2]), std::abs(std::tanh(-1.5)));
}

TEST(Policy, DetachedInputsHaveNoEffect) {
  std::mt19937_64 rng(4);
  const ObservationConfig obs_cfg;
  const PolicyParams p = make_race_policy(obs_cfg, NetworkConfig{}, rng);
  Eigen::VectorXd obs = Eigen::VectorXd::Random(obs_cfg.dimension());
  const PolicyOutput before = policy_forward(p, obs);
  for (int i : opponent_feature_indices(obs_cfg)) obs[i] = 5.0;
  const PolicyOutput after = policy_forward(p, obs);
  EXPECT_EQ(before.mean, after.mean);
  EXPECT_EQ(before.value, after.value);
}

TEST(Policy, LogStdIsClamped) {
  std::mt19937_64 rng(1);
  PolicyParams p = make_policy(2, 2, NetworkConfig{.hidden = {4}}, rng);
  p.log_std << -10.0, 10.0;
  p.clamp_log_std();
  EXPECT_EQ(p.log_std[0], kLogStdMin);
  EXPECT_EQ(p.log_std[1], kLogStdMax);
}

}  // namespace
}  // namespace racer
