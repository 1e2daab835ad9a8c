#include "racer/selfplay.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "racer/eval.hpp"

namespace racer {

void StageConfig::validate() const {
  if (stage < 1 || stage > 3) throw std::invalid_argument("stage must be 1, 2 or 3");
  if (budget < 0) throw std::invalid_argument("stage budget must be non-negative");
  if (eval_interval < 1) throw std::invalid_argument("eval_interval must be >= 1");
  if (n_eval < 1) throw std::invalid_argument("n_eval must be >= 1");
  if (!(win_threshold >= 0.0 && win_threshold <= 1.0)) throw std::invalid_argument("win_threshold must be in [0, 1]");
  if (!(p_latest >= 0.0 && p_latest <= 1.0)) throw std::invalid_argument("p_latest must be in [0, 1]");
  if (promotion_success_ratio > 1.0) throw std::invalid_argument("promotion_success_ratio must be <= 1");
}

std::vector<int> sample_opponent_versions(const CheckpointPool& pool, const StageConfig& stage, Rng& rng) {
  const int n = stage.n_agents() - 1;
  if (n == 0) return {};
  if (pool.empty()) throw std::logic_error("stage " + std::to_string(stage.stage) + " needs a non-empty opponent pool");
  std::vector<int> historical;
  for (const PoolEntry& e : pool.entries()) {
    if (e.version != pool.best_version()) historical.push_back(e.version);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> out;
  for (int k = 0; k < n; ++k) {
    const double u = unit(rng);
    if (historical.empty() || u < stage.p_latest) {
      out.push_back(pool.best_version());
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, historical.size() - 1);
      out.push_back(historical[pick(rng)]);
    }
  }
  return out;
}

std::vector<PilotPtr> sample_opponents(const CheckpointPool& pool, const StageConfig& stage, Rng& rng) {
  std::vector<PilotPtr> out;
  for (int v : sample_opponent_versions(pool, stage, rng)) {
    const auto it = std::find_if(pool.entries().begin(), pool.entries().end(),
                                 [&](const PoolEntry& e) { return e.version == v; });
    out.push_back(std::make_shared<PolicyPilot>(it->params, true, CheckpointPool::checkpoint_name(v)));
  }
  return out;
}

EvalGateResult evaluation_gate(const PolicyParams& candidate, const CheckpointPool& pool, const StageConfig& stage,
                               const EnvConfig& env_cfg, std::uint64_t seed) {
  EvalGateResult r;
  const auto cand = std::make_shared<PolicyPilot>(std::make_shared<const PolicyParams>(candidate), true, "candidate");

  if (stage.stage == 1) {
    const SoloResult mine = solo_runs(env_cfg, cand, stage.n_eval, seed);
    r.success_ratio = mine.success_ratio();
    r.win_rate = r.success_ratio;
    r.mean_lap_time = mine.lap.mean;
    r.wins = mine.successes;
    r.losses = mine.runs - mine.successes;
    if (pool.empty()) {
      r.improved = true;
      return r;
    }
    // Within a stage the recorded success ratio of successive bests never drops.
    if (pool.best().metrics.stage == 1 && r.success_ratio < pool.best().metrics.success_ratio) return r;
    const auto best = std::make_shared<PolicyPilot>(pool.best().params, true, "best");
    const SoloResult theirs = solo_runs(env_cfg, best, stage.n_eval, seed);
    if (mine.successes != theirs.successes) {
      r.improved = mine.successes > theirs.successes;
    } else {
      r.improved = mine.successes > 0 && theirs.lap.mean && *mine.lap.mean < *theirs.lap.mean;
    }
    return r;
  }

  if (pool.empty()) {
    r.improved = true;
    return r;
  }
  const auto best = std::make_shared<PolicyPilot>(pool.best().params, true, "best");
  const MatchResult m = head_to_head(env_cfg, cand, best, stage.n_eval, seed, stage.n_agents());
  r.wins = m.wins;
  r.draws = m.draws;
  r.losses = m.losses;
  r.win_rate = m.win_rate();
  const int per_run = stage.n_agents() / 2;
  r.success_ratio = static_cast<double>(m.lap_times_a.size()) / static_cast<double>(stage.n_eval * per_run);
  r.mean_lap_time = lap_stats(m.lap_times_a).mean;
  r.improved = r.win_rate > stage.win_threshold;
  return r;
}

bool update_pool(CheckpointPool& pool, const PolicyParams& candidate, const EvalGateResult& result, int stage,
                 long long step) {
  if (!result.improved) return false;
  pool.append(candidate, {stage, step, result.win_rate, result.success_ratio, result.mean_lap_time});
  return true;
}

bool seed_pool(CheckpointPool& pool, const PolicyParams& policy, const EnvConfig& env_cfg, int n_eval, int stage,
               std::uint64_t seed) {
  if (!pool.empty() && *pool.best().params == policy) return false;
  const auto pilot = std::make_shared<PolicyPilot>(std::make_shared<const PolicyParams>(policy), true, "seed");
  const SoloResult solo = solo_runs(env_cfg, pilot, n_eval, seed);
  pool.append(policy, {stage, 0, 0.0, solo.success_ratio(), solo.lap.mean});
  return true;
}

std::optional<double> mean_episode_reward(const std::vector<EpisodeSummary>& episodes, long long lo, long long hi) {
  double sum = 0.0;
  int n = 0;
  for (const EpisodeSummary& e : episodes) {
    if (e.end_step >= lo && e.end_step < hi) {
      sum += e.total_reward;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

StageResult run_stage(const StageConfig& stage, const PolicyParams& initial, CheckpointPool& pool,
                      const PpoConfig& ppo, const EnvConfig& env_cfg, std::uint64_t seed, OpponentMode mode,
                      const StageProgress& progress) {
  stage.validate();
  ppo.validate();
  StageResult result;
  result.policy = initial;
  if (stage.budget == 0) return result;
  if (stage.stage > 1 && mode == OpponentMode::kSelfPlay && pool.empty()) {
    throw std::logic_error("stage " + std::to_string(stage.stage) + " needs a seeded opponent pool");
  }

  const RaceEnv env(env_cfg);
  const int n_agents = stage.n_agents();
  RolloutCollector collector(env, ppo.n_envs, n_agents, seed);
  Rng update_rng(seed ^ 0xD1B54A32D192ED03ULL);
  Adam adam;

  OpponentSampler sampler;
  if (mode == OpponentMode::kFixedRandom) {
    sampler = [n_agents](Rng&) {
      return std::vector<PilotPtr>(static_cast<std::size_t>(n_agents - 1), std::make_shared<RandomPilot>());
    };
  } else {
    sampler = [&pool, &stage](Rng& rng) { return sample_opponents(pool, stage, rng); };
  }

  const long long per_env = std::max(1, ppo.rollout_length / ppo.n_envs);
  long long next_gate = stage.eval_interval;
  std::uint64_t gate_index = 0;
  PolicyParams params = initial;

  while (result.steps < stage.budget) {
    const long long remaining = stage.budget - result.steps;
    const long long steps = std::min(per_env, (remaining + ppo.n_envs - 1) / ppo.n_envs);
    Rollout rollout = collector.collect(params, static_cast<int>(steps), ppo, sampler);
    result.steps += rollout.env_steps;

    TrainingLogEntry entry;
    entry.step = result.steps;
    entry.episodes = static_cast<int>(rollout.episodes.size());
    if (!rollout.episodes.empty()) {
      double reward = 0.0, length = 0.0, finished = 0.0;
      for (const EpisodeSummary& e : rollout.episodes) {
        reward += e.total_reward;
        length += e.length;
        finished += e.finished ? 1.0 : 0.0;
      }
      const double n = static_cast<double>(rollout.episodes.size());
      entry.mean_episode_reward = reward / n;
      entry.mean_episode_length = length / n;
      entry.finished_fraction = finished / n;
    }
    result.episodes.insert(result.episodes.end(), rollout.episodes.begin(), rollout.episodes.end());

    UpdateResult upd = ppo_update(params, std::move(rollout.batch), ppo, adam, update_rng);
    entry.update = upd.diagnostics;
    if (upd.diagnostics.aborted || !upd.params.all_finite()) {
      result.collapsed = true;
      result.diagnostic = "non-finite loss during the update at step " + std::to_string(result.steps) + "; ";
      if (!pool.empty()) {
        params = *pool.best().params;
        result.diagnostic += "restored pool version " + std::to_string(pool.best_version());
      } else {
        result.diagnostic += "kept the parameters from before the update";
      }
      entry.pool_size = pool.size();
      entry.best_version = pool.best_version();
      result.log.push_back(entry);
      if (progress) progress(entry);
      break;
    }
    params = std::move(upd.params);

    if (result.steps >= next_gate || result.steps >= stage.budget) {
      while (next_gate <= result.steps) next_gate += stage.eval_interval;
      const EvalGateResult gate = evaluation_gate(params, pool, stage, env_cfg, seed + 1000003ULL * ++gate_index);
      update_pool(pool, params, gate, stage.stage, result.steps);
      entry.gate = gate;
      if (stage.promotion_success_ratio >= 0.0 && gate.success_ratio >= stage.promotion_success_ratio) {
        result.promoted = true;
      }
    }
    entry.pool_size = pool.size();
    entry.best_version = pool.best_version();
    result.log.push_back(entry);
    if (progress) progress(entry);
    if (result.promoted) break;
  }
  result.policy = std::move(params);
  return result;
}

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string training_log_header() {
  return "stage,step,episodes,mean_episode_reward,mean_episode_length,finished_fraction,mean_ratio,clip_fraction,"
         "value_loss,entropy,aborted,gate_win_rate,gate_success_ratio,gate_mean_lap_time,gate_improved,pool_size,"
         "best_version";
}

std::string training_log_row(int stage, const TrainingLogEntry& e) {
  std::ostringstream os;
  os << stage << ',' << e.step << ',' << e.episodes << ',' << opt(e.mean_episode_reward) << ','
     << num(e.mean_episode_length) << ',' << num(e.finished_fraction) << ',' << num(e.update.mean_ratio) << ','
     << num(e.update.clip_fraction) << ',' << num(e.update.value_loss) << ',' << num(e.update.entropy) << ','
     << int(e.update.aborted) << ',';
  if (e.gate) {
    os << num(e.gate->win_rate) << ',' << num(e.gate->success_ratio) << ',' << opt(e.gate->mean_lap_time) << ','
       << int(e.gate->improved);
  } else {
    os << ",,,";
  }
  os << ',' << e.pool_size << ',' << e.best_version;
  return os.str();
}

}  // namespace racer
