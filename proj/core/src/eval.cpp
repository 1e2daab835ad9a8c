#include "racer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "racer/checkpoint.hpp"
#include "racer/trajectory_log.hpp"

namespace racer {

int scenario_agents(Scenario s) {
  switch (s) {
    case Scenario::kSolo: return 1;
    case Scenario::kOneVsOne: return 2;
    case Scenario::kTwoVsTwo: return 4;
  }
  return 1;
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kSolo: return "solo";
    case Scenario::kOneVsOne: return "1v1";
    case Scenario::kTwoVsTwo: return "2v2";
  }
  return "solo";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "solo") return Scenario::kSolo;
  if (s == "1v1") return Scenario::kOneVsOne;
  if (s == "2v2") return Scenario::kTwoVsTwo;
  throw std::invalid_argument("unknown scenario '" + s + "' (expected solo, 1v1 or 2v2)");
}

Scenario scenario_for_agents(int n_agents) {
  switch (n_agents) {
    case 1: return Scenario::kSolo;
    case 2: return Scenario::kOneVsOne;
    case 4: return Scenario::kTwoVsTwo;
    default: throw std::invalid_argument("n_agents must be 1, 2 or 4");
  }
}

void EvalConfig::validate() const {
  if (n_runs < 1) throw EvalConfigError("evaluation needs at least one run");
  if (laps < 1) throw EvalConfigError("evaluation laps must be >= 1");
  if (static_cast<int>(slots.size()) != scenario_agents(scenario)) {
    throw EvalConfigError("scenario " + to_string(scenario) + " needs " + std::to_string(scenario_agents(scenario)) +
                          " policy slots, got " + std::to_string(slots.size()));
  }
}

RunRecord run_race(const EnvConfig& env_cfg, std::span<const PilotPtr> pilots, int laps, std::uint64_t seed,
                   TrajectoryWriter* writer) {
  EnvConfig cfg = env_cfg;
  cfg.episode.laps = laps;
  const RaceEnv env(cfg);
  const int n = static_cast<int>(pilots.size());
  RaceState race = env.reset(n, seed);
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<Observation> obs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) obs[static_cast<std::size_t>(i)] = env.observe(race, i);
  std::vector<Setpoint> sp(static_cast<std::size_t>(n));

  while (!race.all_done()) {
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const AgentState& a = race.agents[k];
      sp[k] = a.active() ? pilots[k]->act(env, race, i, obs[k], rng) : Setpoint{a.drone.position, a.drone.attitude.z()};
    }
    const StepResult res = env.step(race, sp);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      obs[k] = res.agents[k].observation;
      if (writer && res.agents[k].acted) {
        const AgentState& a = race.agents[k];
        TrajectoryRecord rec;
        rec.step = race.steps;
        rec.time = race.sim_time;
        rec.drone = i;
        rec.state = a.drone;
        rec.action = a.last_action;
        rec.terms = res.agents[k].terms;
        rec.reward = res.agents[k].reward;
        rec.next_gate = a.next_gate;
        rec.gate_pass = res.agents[k].gate_event;
        rec.collision = res.agents[k].facts.collision;
        rec.lap = res.agents[k].lap_event;
        writer->write(rec);
      }
    }
  }

  RunRecord rec;
  rec.seed = seed;
  std::optional<double> best;
  for (int i = 0; i < n; ++i) {
    const AgentState& a = race.agents[static_cast<std::size_t>(i)];
    DroneRecord d;
    d.pilot = pilots[static_cast<std::size_t>(i)]->name();
    d.team = a.team;
    d.collisions = a.collisions;
    d.gates_passed = a.gates_passed;
    d.finish_time = a.finish_time;
    if (a.finished) d.lap_time = *a.finish_time / laps;
    d.success = a.finished && a.collisions == 0;
    rec.drones.push_back(d);
    if (a.finished && (!best || *a.finish_time < *best)) best = a.finish_time;
  }
  if (best) {
    std::vector<int> teams;
    for (const AgentState& a : race.agents) {
      if (a.finished && *a.finish_time == *best) teams.push_back(a.team);
    }
    if (std::all_of(teams.begin(), teams.end(), [&](int t) { return t == teams.front(); })) {
      rec.winner_team = teams.front();
    }
  }
  if (!best) {
    // Nobody finished: a team with a surviving drone beats a team that fully crashed.
    std::map<int, bool> survived;
    for (const AgentState& a : race.agents) survived[a.team] = survived[a.team] || !a.crashed;
    int alive = 0, team = -1;
    for (const auto& [t, ok] : survived) {
      if (ok) {
        ++alive;
        team = t;
      }
    }
    if (alive == 1 && survived.size() > 1) rec.winner_team = team;
  }
  return rec;
}

LapStats lap_stats(std::span<const double> t) {
  LapStats s;
  s.samples = static_cast<int>(t.size());
  if (t.empty()) return s;
  double sum = 0.0;
  for (double v : t) sum += v;
  const double mean = sum / static_cast<double>(t.size());
  s.mean = mean;
  if (t.size() < 2) {
    s.stddev = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double v : t) ss += (v - mean) * (v - mean);
  s.stddev = std::sqrt(ss / static_cast<double>(t.size() - 1));
  return s;
}

std::string format_mean_std(const LapStats& s) {
  if (!s.mean) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", *s.mean, s.stddev.value_or(0.0));
  return buf;
}

EvalReport summarize(std::span<const RunRecord> records, const EvalConfig& cfg, std::span<const std::string> labels,
                     const std::string& config_hash) {
  EvalReport rep;
  rep.scenario = cfg.scenario;
  rep.n_runs = static_cast<int>(records.size());
  rep.laps = cfg.laps;
  rep.base_seed = cfg.base_seed;
  rep.config_hash = config_hash;
  if (records.empty()) return rep;

  const std::size_t n_slots = records.front().drones.size();
  std::map<int, std::vector<std::size_t>> team_slots;
  for (std::size_t k = 0; k < n_slots; ++k) {
    SlotReport slot;
    slot.label = k < labels.size() ? labels[k] : records.front().drones[k].pilot;
    slot.team = records.front().drones[k].team;
    std::vector<double> laps;
    for (const RunRecord& r : records) {
      const DroneRecord& d = r.drones[k];
      if (d.success) {
        ++slot.successes;
        laps.push_back(*d.lap_time);
      }
    }
    slot.success_ratio = static_cast<double>(slot.successes) / static_cast<double>(records.size());
    slot.lap = lap_stats(laps);
    rep.slots.push_back(slot);
    team_slots[slot.team].push_back(k);
  }

  for (const auto& [team, slots] : team_slots) {
    TeamReport t;
    t.team = team;
    std::vector<double> all, best;
    int drone_successes = 0, team_successes = 0;
    for (const RunRecord& r : records) {
      std::optional<double> run_best;
      for (std::size_t k : slots) {
        const DroneRecord& d = r.drones[k];
        if (!d.success) continue;
        ++drone_successes;
        all.push_back(*d.lap_time);
        if (!run_best || *d.lap_time < *run_best) run_best = d.lap_time;
      }
      if (run_best) {
        ++team_successes;
        best.push_back(*run_best);
      }
      if (r.winner_team == team) ++t.wins;
    }
    const double runs = static_cast<double>(records.size());
    t.per_drone_success_ratio = drone_successes / (runs * static_cast<double>(slots.size()));
    t.per_drone_lap = lap_stats(all);
    t.team_best_success_ratio = team_successes / runs;
    t.team_best_lap = lap_stats(best);
    rep.teams.push_back(t);
  }
  if (cfg.scenario != Scenario::kSolo) {
    for (const RunRecord& r : records) rep.draws += r.winner_team < 0 ? 1 : 0;
  }
  return rep;
}

namespace {

nlohmann::json stats_json(const LapStats& s) {
  nlohmann::json j;
  j["samples"] = s.samples;
  j["mean"] = s.mean ? nlohmann::json(*s.mean) : nlohmann::json(nullptr);
  j["std"] = s.stddev ? nlohmann::json(*s.stddev) : nlohmann::json(nullptr);
  j["formatted"] = format_mean_std(s);
  return j;
}

std::string ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", r);
  return buf;
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["scenario"] = to_string(scenario);
  j["n_runs"] = n_runs;
  j["laps"] = laps;
  j["base_seed"] = base_seed;
  j["config_hash"] = config_hash;
  j["lap_time_note"] = "lap times are over successful runs only";
  j["slots"] = nlohmann::json::array();
  for (const SlotReport& s : slots) {
    j["slots"].push_back({{"label", s.label},
                          {"team", s.team},
                          {"successes", s.successes},
                          {"success_ratio", s.success_ratio},
                          {"lap_time", stats_json(s.lap)}});
  }
  j["teams"] = nlohmann::json::array();
  for (const TeamReport& t : teams) {
    j["teams"].push_back({{"team", t.team},
                          {"wins", t.wins},
                          {"per_drone", {{"success_ratio", t.per_drone_success_ratio}, {"lap_time", stats_json(t.per_drone_lap)}}},
                          {"team_best", {{"success_ratio", t.team_best_success_ratio}, {"lap_time", stats_json(t.team_best_lap)}}}});
  }
  if (scenario != Scenario::kSolo) j["draws"] = draws;
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << "scenario " << to_string(scenario) << "  runs " << n_runs << "  laps " << laps << "  seed " << base_seed
     << "  config " << config_hash << '\n';
  os << std::left << std::setw(6) << "slot" << std::setw(6) << "team" << std::setw(24) << "pilot" << std::setw(10)
     << "success" << "lap time (s)\n";
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const SlotReport& s = slots[k];
    os << std::left << std::setw(6) << k << std::setw(6) << s.team << std::setw(24) << s.label << std::setw(10)
       << ratio(s.success_ratio) << format_mean_std(s.lap) << '\n';
  }
  if (scenario != Scenario::kSolo) {
    os << '\n'
       << std::left << std::setw(6) << "team" << std::setw(6) << "wins" << std::setw(10) << "success"
       << std::setw(26) << "lap time (per drone)" << std::setw(10) << "best" << "lap time (team best)\n";
    for (const TeamReport& t : teams) {
      os << std::left << std::setw(6) << t.team << std::setw(6) << t.wins << std::setw(10)
         << ratio(t.per_drone_success_ratio) << std::setw(26) << format_mean_std(t.per_drone_lap) << std::setw(10)
         << ratio(t.team_best_success_ratio) << format_mean_std(t.team_best_lap) << '\n';
    }
    os << "draws " << draws << '\n';
  }
  os << "lap times are over successful runs only\n";
  return os.str();
}

PilotPtr make_pilot(const std::string& source, const EnvConfig& env_cfg, const std::string& config_hash) {
  if (source == "random") return std::make_shared<RandomPilot>();
  if (source == "hover") return std::make_shared<HoverPilot>();
  if (source == "crash") return std::make_shared<CrashPilot>();
  if (source == "scripted") return std::make_shared<CenterlinePilot>();
  if (source.rfind("scripted:", 0) == 0) {
    const std::string arg = source.substr(9);
    char* end = nullptr;
    const double speed = std::strtod(arg.c_str(), &end);
    if (arg.empty() || *end != '\0' || !(speed > 0.0)) {
      throw EvalConfigError("bad scripted pilot speed in '" + source + "'");
    }
    return std::make_shared<CenterlinePilot>(speed);
  }
  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(source);
  } catch (const CheckpointError& e) {
    throw EvalConfigError(std::string("cannot load policy '") + source + "': " + e.what());
  }
  if (!config_hash.empty() && ckpt.config_hash != config_hash) {
    throw EvalConfigError("policy '" + source + "' was trained with config " + ckpt.config_hash +
                          " but the current config is " + config_hash);
  }
  if (ckpt.params.observation_dim() != env_cfg.observation.dimension()) {
    throw EvalConfigError("policy '" + source + "' expects " + std::to_string(ckpt.params.observation_dim()) +
                          "-dimensional observations, the environment produces " +
                          std::to_string(env_cfg.observation.dimension()));
  }
  const ObservationConfig& o = env_cfg.observation;
  if (ckpt.position_scale != o.position_scale || ckpt.velocity_scale != o.velocity_scale ||
      ckpt.angle_scale != o.angle_scale || ckpt.rate_scale != o.rate_scale) {
    throw EvalConfigError("policy '" + source + "' was trained with different observation scales");
  }
  const std::string label = std::filesystem::path(source).stem().string();
  return std::make_shared<PolicyPilot>(std::make_shared<const PolicyParams>(std::move(ckpt.params)), true, label);
}

EvalResult run_evaluation(const EvalConfig& cfg, const EnvConfig& env_cfg, std::span<const PilotPtr> pilots,
                          const std::string& config_hash) {
  cfg.validate();
  if (pilots.size() != cfg.slots.size() && !cfg.slots.empty()) {
    throw EvalConfigError("one pilot per slot is required");
  }
  if (static_cast<int>(pilots.size()) != scenario_agents(cfg.scenario)) {
    throw EvalConfigError("wrong number of pilots for scenario " + to_string(cfg.scenario));
  }
  EvalResult out;
  out.records.reserve(static_cast<std::size_t>(cfg.n_runs));
  for (int i = 0; i < cfg.n_runs; ++i) {
    out.records.push_back(run_race(env_cfg, pilots, cfg.laps, cfg.base_seed + static_cast<std::uint64_t>(i)));
  }
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < pilots.size(); ++k) {
    labels.push_back(k < cfg.slots.size() ? cfg.slots[k] : pilots[k]->name());
  }
  out.report = summarize(out.records, cfg, labels, config_hash);
  return out;
}

EvalResult run_evaluation(const EvalConfig& cfg, const EnvConfig& env_cfg, const std::string& config_hash) {
  cfg.validate();
  std::vector<PilotPtr> pilots;
  for (const std::string& s : cfg.slots) pilots.push_back(make_pilot(s, env_cfg, config_hash));
  return run_evaluation(cfg, env_cfg, pilots, config_hash);
}

double MatchResult::win_rate() const {
  const int total = wins + draws + losses;
  return total ? static_cast<double>(wins) / total : 0.0;
}

MatchResult head_to_head(const EnvConfig& env_cfg, const PilotPtr& a, const PilotPtr& b, int n_runs,
                         std::uint64_t seed, int n_agents, int laps) {
  if (n_agents != 2 && n_agents != 4) throw std::invalid_argument("head-to-head needs 2 or 4 drones");
  MatchResult m;
  const int per_team = n_agents / 2;
  for (int i = 0; i < n_runs; ++i) {
    const bool mirrored = (i % 2) == 1;
    const int team_a = mirrored ? 1 : 0;
    std::vector<PilotPtr> pilots;
    for (int k = 0; k < n_agents; ++k) pilots.push_back((k / per_team) == team_a ? a : b);
    RunRecord rec = run_race(env_cfg, pilots, laps, seed + static_cast<std::uint64_t>(i / 2));
    if (rec.winner_team < 0) ++m.draws;
    else if (rec.winner_team == team_a) ++m.wins;
    else ++m.losses;
    for (const DroneRecord& d : rec.drones) {
      if (d.team == team_a && d.success) m.lap_times_a.push_back(*d.lap_time);
    }
    m.records.push_back(std::move(rec));
  }
  return m;
}

SoloResult solo_runs(const EnvConfig& env_cfg, const PilotPtr& pilot, int n_runs, std::uint64_t seed, int laps) {
  SoloResult s;
  std::vector<double> laps_ok;
  const std::vector<PilotPtr> pilots{pilot};
  for (int i = 0; i < n_runs; ++i) {
    const RunRecord rec = run_race(env_cfg, pilots, laps, seed + static_cast<std::uint64_t>(i));
    ++s.runs;
    if (rec.drones[0].success) {
      ++s.successes;
      laps_ok.push_back(*rec.drones[0].lap_time);
    }
  }
  s.lap = lap_stats(laps_ok);
  return s;
}

void write_records_csv(std::ostream& os, std::span<const RunRecord> records) {
  os << "run,seed,drone,team,pilot,success,lap_time,finish_time,collisions,gates_passed\n";
  for (std::size_t r = 0; r < records.size(); ++r) {
    const RunRecord& rec = records[r];
    for (std::size_t k = 0; k < rec.drones.size(); ++k) {
      const DroneRecord& d = rec.drones[k];
      os << r << ',' << rec.seed << ',' << k << ',' << d.team << ',' << d.pilot << ',' << int(d.success) << ',';
      if (d.lap_time) os << std::setprecision(17) << *d.lap_time;
      os << ',';
      if (d.finish_time) os << std::setprecision(17) << *d.finish_time;
      os << ',' << d.collisions << ',' << d.gates_passed << '\n';
    }
  }
}

}  // namespace racer
