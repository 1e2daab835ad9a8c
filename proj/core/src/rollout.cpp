#include "racer/rollout.hpp"

#include <stdexcept>

namespace racer {

RolloutCollector::RolloutCollector(const RaceEnv& env, int n_envs, int n_agents, std::uint64_t seed)
    : env_(env), n_agents_(n_agents) {
  if (n_envs < 1) throw std::invalid_argument("n_envs must be >= 1");
  Rng seeder(seed);
  slots_.resize(static_cast<std::size_t>(n_envs));
  for (Slot& s : slots_) s.rng.seed(seeder());
}

void RolloutCollector::reset_slot(Slot& slot, const OpponentSampler& sampler) {
  slot.race = env_.reset(n_agents_, slot.rng());
  slot.opponents = n_agents_ > 1 ? sampler(slot.rng) : std::vector<PilotPtr>{};
  if (static_cast<int>(slot.opponents.size()) != n_agents_ - 1) {
    throw std::logic_error("opponent sampler returned the wrong number of opponents");
  }
  slot.obs = env_.observe(slot.race, 0);
  slot.episode_reward = 0.0;
  slot.episode_length = 0;
  slot.needs_reset = false;
}

Rollout RolloutCollector::collect(const PolicyParams& learner, int steps_per_env, const PpoConfig& cfg,
                                  const OpponentSampler& sampler) {
  Rollout out;
  const int obs_dim = env_.observation_dim();
  const int act_dim = learner.action_dim();
  const auto total = static_cast<Eigen::Index>(steps_per_env) * static_cast<Eigen::Index>(slots_.size());
  out.batch.observations.resize(obs_dim, total);
  out.batch.actions.resize(act_dim, total);
  out.batch.log_probs.resize(total);
  out.batch.advantages.resize(total);
  out.batch.returns.resize(total);

  const std::int64_t base_step = total_steps_;
  std::vector<Transition> trajectory;
  std::vector<Setpoint> setpoints(static_cast<std::size_t>(n_agents_));
  Eigen::Index column = 0;

  for (std::size_t e = 0; e < slots_.size(); ++e) {
    Slot& slot = slots_[e];
    trajectory.clear();
    for (int t = 0; t < steps_per_env; ++t) {
      if (slot.needs_reset) reset_slot(slot, sampler);

      const PolicyOutput fwd = policy_forward(learner, slot.obs);
      const SampledAction sample = sample_action(learner, slot.obs, slot.rng);
      setpoints[0] = action_to_setpoint(sample.action, slot.race.agents[0].drone, env_.config().episode.max_offset);
      for (int j = 1; j < n_agents_; ++j) {
        const Observation opp_obs = env_.observe(slot.race, j);
        setpoints[static_cast<std::size_t>(j)] =
            slot.opponents[static_cast<std::size_t>(j - 1)]->act(env_, slot.race, j, opp_obs, slot.rng);
      }
      const StepResult step = env_.step(slot.race, setpoints);
      const AgentStep& me = step.agents[0];

      trajectory.push_back({slot.obs, sample.pre_squash, sample.log_prob, me.reward, fwd.value, me.done});
      slot.episode_reward += me.reward;
      ++slot.episode_length;
      slot.obs = me.observation;

      if (me.done) {
        const AgentState& a = slot.race.agents[0];
        out.episodes.push_back({base_step + static_cast<std::int64_t>(t + 1) * static_cast<std::int64_t>(slots_.size()),
                                slot.episode_reward, slot.episode_length, a.gates_passed, a.crashed, a.finished});
        slot.needs_reset = true;
      }
    }
    const double bootstrap = slot.needs_reset ? 0.0 : policy_forward(learner, slot.obs).value;
    const AdvantageEstimate est = compute_gae(trajectory, bootstrap, cfg);
    for (std::size_t k = 0; k < trajectory.size(); ++k, ++column) {
      const Transition& tr = trajectory[k];
      out.batch.observations.col(column) = tr.observation;
      out.batch.actions.col(column) = tr.action;
      out.batch.log_probs[column] = tr.log_prob;
      out.batch.advantages[column] = est.advantages[static_cast<Eigen::Index>(k)];
      out.batch.returns[column] = est.returns[static_cast<Eigen::Index>(k)];
    }
  }
  out.env_steps = static_cast<int>(total);
  total_steps_ += total;
  return out;
}

}  // namespace racer
