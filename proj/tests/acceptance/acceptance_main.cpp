// Acceptance run: one PASS/FAIL line per criterion, followed by the measured
// numbers. Criteria 6, 7 and 9 share one desk-scale training run on the
// mini track.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "racer/config.hpp"
#include "racer/control.hpp"
#include "racer/dynamics.hpp"
#include "racer/env.hpp"
#include "racer/eval.hpp"
#include "racer/policy.hpp"
#include "racer/ppo.hpp"
#include "racer/reward.hpp"
#include "racer/selfplay.hpp"
#include "racer/track.hpp"

using namespace racer;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fails]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

int failures = 0;

void report(int n, const char* name, const Outcome& o, double secs, const char* note = "") {
  std::printf("criterion %d (%s): %s  %s  [%.1f s]%s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
              note);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

DroneState at(const Vec3& p) {
  DroneState s;
  s.position = p;
  return s;
}

DroneState fly(DroneState s, const MotorCommand& cmd, const DroneParams& p, double seconds) {
  const int n = static_cast<int>(std::lround(seconds / kPhysicsDt));
  for (int i = 0; i < n; ++i) s = step(s, cmd, p);
  return s;
}

Outcome physics() {
  Outcome o;
  const DroneParams p;
  const DroneState h0 = at(Vec3(0.0, 0.0, 1.0));
  const double drift = (fly(h0, hover_command(p), p, 10.0).position - h0.position).norm();
  o.check(drift < 1e-6, "hover drift " + fmt("%.2e", drift) + " m");

  DroneParams nodrag = p;
  nodrag.drag.setZero();
  const DroneState ff = fly(at(Vec3(0.0, 0.0, 100.0)), MotorCommand{}, nodrag, 1.0);
  const double z_ff = 100.0 - 0.5 * p.gravity;
  double rel = std::abs(ff.position.z() - z_ff) / z_ff;

  DroneParams drag = p;
  const double kd = 0.01;
  drag.drag = Vec3::Constant(kd);
  DroneState d0 = at(Vec3(0.0, 0.0, 50.0));
  d0.velocity.z() = 2.0;
  const double tau = p.mass / kd, v_inf = -p.mass * p.gravity / kd;
  for (double t : {0.5, 1.0}) {
    const DroneState s = fly(d0, MotorCommand{}, drag, t);
    const double v = v_inf + (2.0 - v_inf) * std::exp(-t / tau);
    const double z = 50.0 + v_inf * t + (2.0 - v_inf) * tau * (1.0 - std::exp(-t / tau));
    rel = std::max({rel, std::abs(s.velocity.z() - v) / std::abs(v), std::abs(s.position.z() - z) / z});
  }
  o.check(rel < 1e-4, "free fall / drag rel err " + fmt("%.2e", rel));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> speed(0.0, p.max_speed_squared());
  double alloc = 0.0;
  for (int k = 0; k < 1000; ++k) {
    MotorCommand c;
    for (int j = 0; j < 4; ++j) c.speeds_squared[j] = speed(rng);
    const Wrench w = allocate(c, p);
    const Wrench b = allocate(allocate_inverse(w, p), p);
    alloc = std::max({alloc, std::abs(b.thrust - w.thrust), (b.torque - w.torque).cwiseAbs().maxCoeff()});
  }
  o.check(alloc < 1e-9, "allocation round trip " + fmt("%.2e", alloc));

  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  double ortho = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Mat3 r = rotation_matrix(Vec3(ang(rng), 0.45 * ang(rng), ang(rng)));
    ortho = std::max(ortho, (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff());
  }
  o.check(ortho < 1e-12, "orthonormality " + fmt("%.2e", ortho));
  return o;
}

struct ControlSim {
  DroneParams params;
  PidGains gains;
  DroneState state;
  ControllerState ctl;

  void run(const Setpoint& sp, double seconds, const std::function<void(double)>& each) {
    const int n = static_cast<int>(std::lround(seconds / kPhysicsDt));
    for (int i = 0; i < n; ++i) {
      const ControlOutput out = control_step(state, sp, ctl, gains, params);
      state = step(state, out.command, params);
      ctl = out.next;
      each((i + 1) * kPhysicsDt);
    }
  }
};

Outcome controller() {
  Outcome o;
  {
    ControlSim sim;
    sim.state = at(Vec3(0.0, 0.0, 1.5));
    const Setpoint sp{Vec3(1.0, 0.0, 1.5), 0.0};
    double settle = 0.0;
    sim.run(sp, 5.0, [&](double t) {
      if ((sim.state.position - sp.target_position).norm() > 0.05) settle = t;
    });
    o.check(settle <= 2.0, "1 m step settles in " + fmt("%.2f", settle) + " s");
  }
  {
    ControlSim sim;
    sim.state = at(Vec3(-1.0, 2.0, 1.5));
    const Setpoint sp{sim.state.position, 0.0};
    double worst = 0.0;
    sim.run(sp, 30.0, [&](double) { worst = std::max(worst, (sim.state.position - sp.target_position).norm()); });
    o.check(worst < 0.01, "30 s hover drift " + fmt("%.2e", worst) + " m");
  }
  {
    ControlSim sim;
    sim.gains.attitude_i = Vec3::Constant(5.0);
    sim.state = at(Vec3(0.0, 0.0, 1.5));
    bool bounded = true;
    sim.run(Setpoint{Vec3(40.0, -40.0, 30.0), 2.5}, 3.0, [&](double) {
      bounded = bounded &&
                (sim.ctl.position_integral.cwiseAbs().array() <= sim.gains.position_integrator_limit.array()).all() &&
                (sim.ctl.attitude_integral.cwiseAbs().array() <= sim.gains.attitude_integrator_limit.array()).all();
    });
    o.check(bounded, "integrators bounded");
  }
  return o;
}

// Discounted TD-error sum up to the first terminal step.
double brute_gae(const std::vector<Transition>& r, double boot, double g, double l, std::size_t t) {
  double sum = 0.0, w = 1.0;
  for (std::size_t k = t; k < r.size(); ++k) {
    const double next = k + 1 < r.size() ? r[k + 1].value : boot;
    sum += w * (r[k].reward + (r[k].done ? 0.0 : g * next) - r[k].value);
    if (r[k].done) break;
    w *= g * l;
  }
  return sum;
}

Outcome learner() {
  Outcome o;
  std::mt19937_64 rng(2024);
  NetworkConfig net;
  net.hidden = {2};
  net.actor_output_gain = 1.0;
  PolicyParams params = make_policy(1, 1, net, rng);
  params.critic = Mlp::orthogonal({1, 1}, 1.0, 1.0, rng);
  {
    std::normal_distribution<double> n(0.0, 0.3);
    Eigen::VectorXd v = params.to_vector();
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += n(rng);
    params.from_vector(v);
  }
  PolicyParams behaviour = params;
  Eigen::VectorXd bv = behaviour.to_vector();
  bv.array() += 0.01;
  behaviour.from_vector(bv);
  Batch b;
  const int n = 64;
  b.observations.resize(1, n);
  b.actions.resize(1, n);
  b.log_probs.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(1);
    x << g(rng);
    const SampledAction s = sample_action(behaviour, x, rng);
    b.observations.col(i) = x;
    b.actions.col(i) = s.pre_squash;
    b.log_probs[i] = s.log_prob;
    b.advantages[i] = g(rng);
    b.returns[i] = g(rng);
  }
  const PpoConfig cfg;
  PolicyParams grad;
  (void)ppo_loss(params, b, cfg, &grad);
  const Eigen::VectorXd an = grad.to_vector(), x0 = params.to_vector();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    PolicyParams pp = params, pm = params;
    Eigen::VectorXd xp = x0, xm = x0;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    pp.from_vector(xp);
    pm.from_vector(xm);
    const double fd = (ppo_loss(pp, b, cfg, nullptr).total - ppo_loss(pm, b, cfg, nullptr).total) / 2e-6;
    worst = std::max(worst, std::abs(an[i] - fd) / std::max(std::abs(fd), 1e-3));
  }
  o.check(x0.size() == 10 && worst < 1e-4,
          std::to_string(x0.size()) + "-parameter gradient rel err " + fmt("%.2e", worst));

  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
  double gae = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    PpoConfig c;
    c.gamma = 0.5 + 0.5 * p(rng);
    c.lambda = p(rng);
    std::vector<Transition> r(static_cast<std::size_t>(1 + trial % 10));
    for (Transition& t : r) {
      t.reward = u(rng);
      t.value = u(rng);
      t.done = p(rng) < 0.2;
    }
    const double boot = u(rng);
    const AdvantageEstimate est = compute_gae(r, boot, c);
    for (std::size_t t = 0; t < r.size(); ++t) {
      gae = std::max(gae, std::abs(est.advantages[static_cast<Eigen::Index>(t)] - brute_gae(r, boot, c.gamma, c.lambda, t)));
    }
  }
  o.check(gae < 1e-10, "GAE max err " + fmt("%.2e", gae));

  PpoConfig zero;
  zero.learning_rate = 0.0;
  zero.minibatch_size = 16;
  Adam adam;
  const UpdateResult upd = ppo_update(params, b, zero, adam, rng);
  o.check(upd.params == params, "lr=0 update is identity");
  return o;
}

double reference_reward(const TransitionFacts& f, const RewardWeights& w) {
  double r = w.progress_weight * (w.progress_scale * f.progress + w.gate_bonus * f.gates_passed);
  if (f.collision) r -= w.collision_weight * w.collision_penalty;
  const double a = std::cos(f.alignment_angle) - std::cos(w.alignment_threshold);
  if (a > 0.0) r += w.alignment_weight * w.alignment_scale * a;
  if (f.lap_time) r += 100.0 / *f.lap_time;
  return r;
}

Outcome environment() {
  Outcome o;
  Gate g;
  g.center = Vec3(0.0, 0.0, 1.0);
  g.normal = Vec3::UnitX();
  const bool center = gate_passed(Vec3(-0.1, 0.0, 1.0), Vec3(0.1, 0.0, 1.0), g);
  const bool off = gate_passed(Vec3(-0.1, 1.0, 1.0), Vec3(0.1, 1.0, 1.0), g);
  const bool reverse = gate_passed(Vec3(0.1, 0.0, 1.0), Vec3(-0.1, 0.0, 1.0), g);
  o.check(center && !off && !reverse, "gate pass center/off-aperture/reverse");

  // Scripted lap through every gate center, with lateral wiggles in between.
  const Track t = Track::circle(TrackLayout{});
  std::mt19937_64 rng(21);
  std::normal_distribution<double> wiggle(0.0, 0.15);
  int next = 1;
  Vec3 pos = t.gate(0).center;
  double arc = t.approach_arc(pos, next), sum = 0.0;
  for (int s = 0; s < t.size(); ++s) {
    const Vec3 a = t.gate(s).center, b = t.gate(t.wrap_index(s + 1)).center;
    for (int k = 1; k <= 97; ++k) {
      Vec3 q = a + (b - a) * (k / 97.0);
      if (k < 94) q += Vec3(wiggle(rng), wiggle(rng), 0.0);
      if (gate_passed(pos, q, t.gate(next)) || (k == 97 && (q - t.gate(next).center).norm() < 1e-12)) {
        next = t.wrap_index(next + 1);
      }
      const double na = t.approach_arc(q, next);
      sum += progress_delta(arc, na, t.total_length());
      arc = na;
      pos = q;
    }
  }
  o.check(std::abs(sum - t.total_length()) < 1e-6,
          "lap progress " + fmt("%.9f", sum) + " vs length " + fmt("%.1f", t.total_length()));

  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    RewardWeights w;
    w.progress_weight = 2.0 * u(rng);
    w.collision_weight = 2.0 * u(rng);
    w.alignment_weight = 2.0 * u(rng);
    w.gate_bonus = 10.0 * u(rng);
    w.alignment_threshold = std::numbers::pi * u(rng);
    TransitionFacts f;
    f.progress = 2.0 * u(rng) - 1.0;
    f.gates_passed = u(rng) < 0.2 ? 1 : 0;
    f.collision = u(rng) < 0.1;
    f.alignment_angle = std::numbers::pi * u(rng);
    if (u(rng) < 0.05) f.lap_time = 5.0 + 20.0 * u(rng);
    const double ref = reference_reward(f, w);
    worst = std::max(worst, std::abs(compute_reward(f, w) - ref) / (1.0 + std::abs(ref)));
  }
  o.check(worst < 1e-12, "1000 reward tuples max err " + fmt("%.1e", worst));

  const RaceEnv env(EnvConfig{});
  bool dims = true;
  for (int n : {1, 2, 4}) {
    const RaceState race = env.reset(n, 1);
    for (int i = 0; i < n; ++i) dims = dims && env.observe(race, i).size() == 82;
  }
  o.check(dims, "observation dimension 82 for 1, 2 and 4 drones");
  return o;
}

Outcome throughput() {
  Outcome o;
  const EnvConfig cfg;
  const RaceEnv env(cfg);
  RaceState race = env.reset(4, 0);
  std::vector<Setpoint> hold;
  for (const AgentState& a : race.agents) hold.push_back({a.drone.position, a.drone.attitude.z()});
  long substeps = 0;
  const auto t0 = Clock::now();
  while (seconds_since(t0) < 2.0) {
    for (int k = 0; k < 48; ++k) (void)env.step(race, hold);
    substeps += 48L * cfg.episode.substeps;
    if (race.all_done()) race = env.reset(4, 0);
  }
  const double rate = static_cast<double>(substeps) / seconds_since(t0);
  o.check(rate >= 10000.0, "4-drone env " + fmt("%.0f", rate) + " substeps/s");
  return o;
}

struct Trained {
  ExperimentConfig cfg;
  PolicyParams stage1;
  CheckpointPool pool;
};

Outcome learning(Trained& tr) {
  Outcome o;
  const StageConfig& stage = tr.cfg.stages.front();
  std::mt19937_64 rng(tr.cfg.seed);
  const PolicyParams init = make_race_policy(tr.cfg.env.observation, tr.cfg.network, rng);
  const StageResult r = run_stage(stage, init, tr.pool, tr.cfg.ppo, tr.cfg.env, tr.cfg.seed);
  // The stage hands on its best gated checkpoint; the last update may have
  // wandered off it.
  tr.stage1 = tr.pool.size() > 0 ? *tr.pool.best().params : r.policy;
  const long long decile = stage.budget / 10;
  const auto first = mean_episode_reward(r.episodes, 0, decile);
  const auto last = mean_episode_reward(r.episodes, stage.budget - decile, r.steps + 1);
  // "At least twice" measured as a gain of at least |first|, which equals
  // last >= 2 * first for a positive first decile and stays meaningful for
  // a negative one.
  const bool trend = first && last && *last >= *first + std::abs(*first);
  o.check(trend, "episode reward first decile " + fmt("%.3f", first.value_or(NAN)) + ", last decile " +
                     fmt("%.3f", last.value_or(NAN)) + " over " + std::to_string(r.steps) + " steps");
  const auto me = std::make_shared<PolicyPilot>(std::make_shared<const PolicyParams>(tr.stage1), true, "trained");
  const MatchResult m = head_to_head(tr.cfg.env, me, std::make_shared<RandomPilot>(), 20, 777);
  o.check(m.win_rate() >= 0.9, "pool v" + std::to_string(tr.pool.best_version()) + " vs random " + std::to_string(m.wins) + "/" + std::to_string(m.draws) + "/" +
                                   std::to_string(m.losses) + " (win/draw/loss), win rate " +
                                   fmt("%.2f", m.win_rate()));
  return o;
}

Outcome selfplay(const Trained& tr) {
  Outcome o;
  bool monotone = true;
  for (std::size_t k = 1; k < tr.pool.entries().size(); ++k) {
    const PoolEntry& a = tr.pool.entries()[k - 1];
    const PoolEntry& b = tr.pool.entries()[k];
    monotone = monotone && b.version == a.version + 1 && b.metrics.success_ratio >= a.metrics.success_ratio;
  }
  CheckpointPool scratch = tr.pool;
  const std::vector<PoolEntry> before = scratch.entries();
  const int v = scratch.append(tr.stage1, {2, 0, 0.0, 0.0, std::nullopt});
  const bool append_only =
      v == (before.empty() ? 1 : before.back().version + 1) && scratch.best_version() == v &&
      std::equal(before.begin(), before.end(), scratch.entries().begin(),
                 [](const PoolEntry& x, const PoolEntry& y) { return x.version == y.version && x.params == y.params; });
  o.check(monotone && append_only, "pool of " + std::to_string(tr.pool.size()) +
                                       " versions: append-only, versions consecutive, recorded success non-decreasing");

  CheckpointPool self;
  self.append(tr.stage1, {1, 0, 0.0, 0.0, std::nullopt});
  StageConfig gate;
  gate.stage = 2;
  gate.n_eval = 100;
  const EvalGateResult g = evaluation_gate(tr.stage1, self, gate, tr.cfg.env, 4242);
  o.check(g.win_rate >= 0.35 && g.win_rate <= 0.65 && !g.improved,
          "self-match " + std::to_string(g.wins) + "/" + std::to_string(g.draws) + "/" + std::to_string(g.losses) +
              " win rate " + fmt("%.2f", g.win_rate));

  StageConfig arm = tr.cfg.stages.at(1);
  arm.budget = 4096;
  arm.eval_interval = 4096;
  arm.n_eval = 4;
  CheckpointPool arm_pool;
  const StageResult r =
      run_stage(arm, tr.stage1, arm_pool, tr.cfg.ppo, tr.cfg.env, 5, OpponentMode::kFixedRandom);
  o.check(r.steps == arm.budget && !r.collapsed && arm_pool.size() == 1,
          "fixed-opponent arm ran " + std::to_string(r.steps) + " steps");
  return o;
}

Outcome evaluation() {
  Outcome o;
  EvalConfig ec;
  ec.n_runs = 50;
  ec.scenario = Scenario::kOneVsOne;
  ec.slots = {"scripted", "scripted:2.5"};
  ec.base_seed = 100;
  const EnvConfig env;
  const EvalResult a = run_evaluation(ec, env, "acceptance");
  const EvalResult b = run_evaluation(ec, env, "acceptance");
  o.check(a.report.to_table() == b.report.to_table() && a.report.to_json() == b.report.to_json(),
          "50-run 1v1 report identical on rerun");
  const std::regex cell("[0-9]+\\.[0-9]{4} ± [0-9]+\\.[0-9]{4}");
  const std::string table = a.report.to_table();
  const bool format = std::regex_search(table, cell) && table.find("success") != std::string::npos;
  o.check(format, "table reports success ratio and mean ± std lap time");

  EvalConfig solo;
  solo.n_runs = 50;
  solo.slots = {"scripted"};
  const EvalResult s = run_evaluation(solo, env, "");
  o.check(s.report.slots[0].success_ratio == 1.0,
          "centerline oracle success " + fmt("%.2f", s.report.slots[0].success_ratio) + ", lap " +
              format_mean_std(s.report.slots[0].lap) + " s");
  return o;
}

Outcome ordering(const Trained& tr) {
  Outcome o;
  const StageConfig& stage = tr.cfg.stages.at(1);
  const std::uint64_t seed = tr.cfg.seed * 1000003ULL + 2;
  CheckpointPool pool;
  (void)seed_pool(pool, tr.stage1, tr.cfg.env, stage.n_eval, 1, seed + 17);
  const StageResult with = run_stage(stage, tr.stage1, pool, tr.cfg.ppo, tr.cfg.env, seed);
  CheckpointPool unused;
  const StageResult without =
      run_stage(stage, tr.stage1, unused, tr.cfg.ppo, tr.cfg.env, seed, OpponentMode::kFixedRandom);
  const auto a = std::make_shared<PolicyPilot>(std::make_shared<const PolicyParams>(with.policy), true, "selfplay");
  const auto b = std::make_shared<PolicyPilot>(std::make_shared<const PolicyParams>(without.policy), true, "fixed");
  const MatchResult m = head_to_head(tr.cfg.env, a, b, 50, 9001);
  o.check(m.win_rate() >= 0.6, "after " + std::to_string(with.steps) + " 1v1 steps each, self-play vs fixed " +
                                   std::to_string(m.wins) + "/" + std::to_string(m.draws) + "/" +
                                   std::to_string(m.losses) + " win rate " + fmt("%.2f", m.win_rate()));
  return o;
}

}  // namespace

int main() {
  // Criteria with a runtime budget fail when they overrun it.
  auto timed = [](int n, const char* name, auto fn, double limit = 0.0, const char* note = "") {
    const auto t0 = Clock::now();
    Outcome o = fn();
    const double secs = seconds_since(t0);
    if (limit > 0.0) o.check(secs <= limit, "runtime budget " + fmt("%.0f", limit) + " s");
    report(n, name, o, secs, note);
  };
  timed(1, "physics", physics, 10.0);
  timed(2, "controller", controller, 30.0);
  timed(3, "learner", learner, 60.0);
  timed(4, "environment", environment);
  timed(5, "throughput", throughput);

  Trained tr;
  tr.cfg = load_config(std::string(RACER_CONFIG_DIR) + "/mini.yaml");
  timed(6, "desk-scale learning", [&] { return learning(tr); }, 1800.0);
  timed(7, "self-play mechanics", [&] { return selfplay(tr); });
  timed(8, "evaluation protocol", evaluation);
  timed(9, "self-play beats fixed opponents", [&] { return ordering(tr); }, 0.0, "  (expected, not guaranteed)");

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
