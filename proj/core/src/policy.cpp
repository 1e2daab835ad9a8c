#include "racer/policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace racer {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

Eigen::Index PolicyParams::num_params() const {
  return actor.num_params() + log_std.size() + critic.num_params();
}

Eigen::VectorXd PolicyParams::to_vector() const {
  Eigen::VectorXd v(num_params());
  const Eigen::Index na = actor.num_params();
  actor.write_params(v.head(na));
  v.segment(na, log_std.size()) = log_std;
  critic.write_params(v.tail(critic.num_params()));
  return v;
}

void PolicyParams::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != num_params()) throw std::invalid_argument("parameter vector size mismatch");
  const Eigen::Index na = actor.num_params();
  actor.read_params(v.head(na));
  log_std = v.segment(na, log_std.size());
  critic.read_params(v.tail(critic.num_params()));
}

PolicyParams PolicyParams::zeros_like() const {
  return {actor.zeros_like(), Eigen::VectorXd::Zero(log_std.size()), critic.zeros_like()};
}

bool PolicyParams::all_finite() const { return to_vector().allFinite(); }

void PolicyParams::clamp_log_std() { log_std = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax); }

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

PolicyParams make_policy(int observation_dim, int action_dim, const NetworkConfig& cfg, std::mt19937_64& rng) {
  PolicyParams p;
  p.actor = Mlp::orthogonal(layer_sizes(observation_dim, cfg.hidden, action_dim), cfg.hidden_gain,
                            cfg.actor_output_gain, rng);
  p.critic = Mlp::orthogonal(layer_sizes(observation_dim, cfg.hidden, 1), cfg.hidden_gain,
                             cfg.critic_output_gain, rng);
  p.log_std = Eigen::VectorXd::Constant(action_dim, cfg.initial_log_std);
  p.clamp_log_std();
  return p;
}

void detach_inputs(PolicyParams& params, std::span<const int> inputs) {
  for (Mlp* net : {&params.actor, &params.critic}) {
    Eigen::MatrixXd& w = net->layers.front().weight;
    for (int i : inputs) {
      if (i < 0 || i >= w.cols()) throw std::out_of_range("detach_inputs: input index out of range");
      w.col(i).setZero();
    }
  }
}

PolicyParams make_race_policy(const ObservationConfig& obs, const NetworkConfig& cfg, std::mt19937_64& rng) {
  PolicyParams p = make_policy(obs.dimension(), kActionDim, cfg, rng);
  detach_inputs(p, opponent_feature_indices(obs));
  return p;
}

PolicyParams zero_policy(int observation_dim, int action_dim, const std::vector<int>& hidden) {
  PolicyParams p;
  p.actor = Mlp(layer_sizes(observation_dim, hidden, action_dim));
  p.critic = Mlp(layer_sizes(observation_dim, hidden, 1));
  p.log_std = Eigen::VectorXd::Zero(action_dim);
  return p;
}

PolicyOutput policy_forward(const PolicyParams& params, const Eigen::VectorXd& obs) {
  if (obs.size() != params.observation_dim()) {
    throw std::invalid_argument("observation dimension " + std::to_string(obs.size()) +
                                " does not match policy input " + std::to_string(params.observation_dim()));
  }
  PolicyOutput out;
  out.mean = params.actor.forward(obs);
  out.log_std = params.log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  out.value = params.critic.forward(obs)[0];
  return out;
}

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, const Eigen::VectorXd& u) {
  const Eigen::ArrayXd z = (u - mean).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array() - kHalfLog2Pi).sum();
}

double tanh_log_det_jacobian(const Eigen::VectorXd& u) {
  // log(1 - tanh(u)^2) = 2 * (log 2 - u - softplus(-2u))
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) s += 2.0 * (std::numbers::ln2 - u[i] - softplus(-2.0 * u[i]));
  return s;
}

double squashed_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, const Eigen::VectorXd& u) {
  return gaussian_log_prob(mean, log_std, u) - tanh_log_det_jacobian(u);
}

SampledAction sample_action(const PolicyParams& params, const Eigen::VectorXd& obs, std::mt19937_64& rng) {
  const PolicyOutput out = policy_forward(params, obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledAction s;
  s.pre_squash.resize(out.mean.size());
  for (Eigen::Index i = 0; i < out.mean.size(); ++i) {
    s.pre_squash[i] = out.mean[i] + std::exp(out.log_std[i]) * normal(rng);
  }
  s.action = s.pre_squash.array().tanh();
  s.log_prob = squashed_log_prob(out.mean, out.log_std, s.pre_squash);
  return s;
}

Eigen::VectorXd PolicyOutput::squashed_mean() const {
  // Trapezoidal rule over +-8 standard deviations.
  constexpr int kNodes = 161;
  constexpr double kSpan = 8.0;
  constexpr double kStep = 2.0 * kSpan / (kNodes - 1);
  Eigen::VectorXd a(mean.size());
  for (Eigen::Index d = 0; d < mean.size(); ++d) {
    const double sigma = std::exp(log_std[d]);
    double acc = 0.0;
    double norm = 0.0;
    for (int k = 0; k < kNodes; ++k) {
      const double z = -kSpan + k * kStep;
      const double w = std::exp(-0.5 * z * z);
      acc += w * std::tanh(mean[d] + sigma * z);
      norm += w;
    }
    a[d] = acc / norm;
  }
  return a;
}

double gaussian_entropy(const Eigen::VectorXd& log_std) {
  return (log_std.array() + 0.5 + kHalfLog2Pi).sum();
}

double squashed_entropy(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std) {
  // H[tanh(u)] = H[u] + E[log(1 - tanh(u)^2)], expectation by the trapezoidal
  // rule over +-10 standard deviations.
  constexpr int kNodes = 4001;
  constexpr double kSpan = 10.0;
  double h = gaussian_entropy(log_std);
  for (Eigen::Index d = 0; d < mean.size(); ++d) {
    const double sigma = std::exp(log_std[d]);
    const double step = 2.0 * kSpan / (kNodes - 1);
    double acc = 0.0;
    for (int k = 0; k < kNodes; ++k) {
      const double z = -kSpan + k * step;
      const double w = (k == 0 || k == kNodes - 1) ? 0.5 : 1.0;
      const double u = mean[d] + sigma * z;
      const double log_jac = 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
      acc += w * std::exp(-0.5 * z * z - kHalfLog2Pi) * log_jac;
    }
    h += acc * step;
  }
  return h;
}

}  // namespace racer
