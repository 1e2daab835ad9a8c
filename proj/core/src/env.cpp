#include "racer/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace racer {

void EpisodeConfig::validate() const {
  if (laps < 1) throw std::invalid_argument("episode.laps must be >= 1");
  if (!(timeout > 0.0)) throw std::invalid_argument("episode.timeout must be positive");
  if (substeps < 1) throw std::invalid_argument("episode.substeps must be >= 1");
  if (!(max_offset > 0.0)) throw std::invalid_argument("episode.max_offset must be positive");
  if (start_longitudinal_jitter < 0.0 || start_lateral_jitter < 0.0 || start_vertical_jitter < 0.0) {
    throw std::invalid_argument("start jitter must be non-negative");
  }
}

void EnvConfig::validate() const {
  drone.validate();
  gains.validate();
  reward.validate();
  observation.validate();
  episode.validate();
}

bool RaceState::all_done() const {
  return timed_out || std::none_of(agents.begin(), agents.end(), [](const AgentState& a) { return a.active(); });
}

Setpoint action_to_setpoint(const Vec4& action, const DroneState& state, double max_offset) {
  Setpoint sp;
  sp.target_position = state.position + action.head<3>() * max_offset;
  sp.target_yaw = action[3] * std::numbers::pi;
  return sp;
}

RaceEnv::RaceEnv(EnvConfig cfg) : cfg_(std::move(cfg)), track_(Track::circle(cfg_.track)) {
  cfg_.validate();
}

AgentState RaceEnv::make_agent(const DroneState& drone, int team) const {
  AgentState a;
  a.drone = drone;
  a.team = team;
  a.history = HistoryBuffer(cfg_.observation.history_length, cfg_.observation.snapshot_dim());
  a.arc = track_.approach_arc(drone.position, a.next_gate);
  return a;
}

RaceState RaceEnv::reset(int n_agents, std::uint64_t placement_seed) const {
  if (n_agents != 1 && n_agents != 2 && n_agents != 4) {
    throw std::invalid_argument("n_agents must be 1, 2 or 4");
  }
  std::mt19937_64 rng(placement_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const EpisodeConfig& ep = cfg_.episode;

  const int last = track_.size() - 1;
  const Vec3 forward = track_.segment_direction(last);
  const Vec3 lateral = Vec3::UnitZ().cross(forward).normalized();
  const Vec3 base = track_.gate(0).center - forward * ep.start_distance;
  const double yaw = std::atan2(forward.y(), forward.x());
  const double min_separation = 4.0 * cfg_.drone.collision_radius;

  RaceState race;
  for (int i = 0; i < n_agents; ++i) {
    // Teams occupy opposite lateral halves of the start area.
    const int team = n_agents == 4 ? i / 2 : i;
    const double side = n_agents == 1 ? 0.0 : (team == 0 ? 1.0 : -1.0);
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      double lat = unit(rng) * ep.start_lateral_jitter;
      if (side != 0.0) lat = side * std::abs(lat);
      const Vec3 p = base + forward * (unit(rng) * ep.start_longitudinal_jitter) + lateral * lat +
                     Vec3::UnitZ() * (unit(rng) * ep.start_vertical_jitter);
      const bool clear = std::all_of(race.agents.begin(), race.agents.end(), [&](const AgentState& o) {
        return (o.drone.position - p).norm() >= min_separation;
      });
      if (!clear) continue;
      DroneState s;
      s.position = p;
      s.attitude.z() = yaw;
      race.agents.push_back(make_agent(s, team));
      placed = true;
    }
    if (!placed) throw std::invalid_argument("could not place drones on the start area; enlarge the jitter");
  }
  // The first observation already shows the gates; older history stays zero.
  std::vector<std::vector<double>> snaps;
  for (int i = 0; i < n_agents; ++i) snaps.push_back(snapshot(race, i));
  for (int i = 0; i < n_agents; ++i) race.agents[static_cast<std::size_t>(i)].history.push(snaps[static_cast<std::size_t>(i)]);
  return race;
}

double RaceEnv::alignment_angle(const AgentState& a) const {
  const Vec3 to_gate = track_.gate(a.next_gate).center - a.drone.position;
  if (to_gate.head<2>().norm() < 1e-9) return 0.0;
  const double bearing = std::atan2(to_gate.y(), to_gate.x());
  return std::abs(wrap_angle(bearing - a.drone.attitude.z()));
}

bool RaceEnv::hits_environment(const Vec3& p) const {
  const double r = cfg_.drone.collision_radius;
  if (p.z() < r) return true;
  if (!track_.bounds().contains(p)) return true;
  return std::any_of(track_.gates().begin(), track_.gates().end(),
                     [&](const Gate& g) { return sphere_hits_gate_frame(p, r, g); });
}

std::vector<double> RaceEnv::snapshot(const RaceState& race, int agent) const {
  const AgentState& self = race.agents[static_cast<std::size_t>(agent)];
  SnapshotFeatures f;
  for (int j = 0; j < static_cast<int>(race.agents.size()); ++j) {
    const AgentState& other = race.agents[static_cast<std::size_t>(j)];
    if (j == agent || !other.active()) continue;
    f.opponents.push_back(other.drone.position - self.drone.position);
  }
  std::stable_sort(f.opponents.begin(), f.opponents.end(),
                   [](const Vec3& a, const Vec3& b) { return a.squaredNorm() < b.squaredNorm(); });
  for (int k = 0; k < cfg_.observation.n_gates; ++k) {
    f.gates.push_back(track_.gate(track_.wrap_index(self.next_gate + k)).center - self.drone.position);
  }
  f.action = self.last_action;
  return encode_snapshot(f, cfg_.observation);
}

Observation RaceEnv::observe(const RaceState& race, int agent) const {
  const AgentState& a = race.agents.at(static_cast<std::size_t>(agent));
  return build_observation(a.drone, a.history, cfg_.observation);
}

StepResult RaceEnv::step(RaceState& race, std::span<const Setpoint> setpoints) const {
  const std::size_t n = race.agents.size();
  if (setpoints.size() != n) throw std::invalid_argument("one setpoint per agent is required");

  StepResult result;
  result.agents.resize(n);
  std::vector<Setpoint> clamped(n);
  std::vector<char> was_active(n);
  // Targets stay a margin inside the walls so a held setpoint never rests on one.
  const double margin = 2.0 * cfg_.drone.collision_radius;
  const Aabb safe{track_.bounds().min.array() + margin, track_.bounds().max.array() - margin};
  for (std::size_t i = 0; i < n; ++i) {
    AgentState& a = race.agents[i];
    was_active[i] = a.active() && !race.timed_out;
    result.agents[i].acted = was_active[i];
    if (!was_active[i]) continue;
    clamped[i] = clamp_setpoint(setpoints[i], a.drone, cfg_.episode.max_offset, safe);
    Vec4 act;
    act.head<3>() = (clamped[i].target_position - a.drone.position) / cfg_.episode.max_offset;
    act[3] = clamped[i].target_yaw / std::numbers::pi;
    a.last_action = act;
  }

  const double dt = kPhysicsDt;
  std::vector<char> collided(n, 0);
  for (int sub = 0; sub < cfg_.episode.substeps; ++sub) {
    const double t_next = race.sim_time + dt;
    std::vector<char> live(n);
    for (std::size_t i = 0; i < n; ++i) live[i] = was_active[i] && race.agents[i].active();

    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) continue;
      AgentState& a = race.agents[i];
      AgentStep& out = result.agents[i];
      const ControlOutput ctl = control_step(a.drone, clamped[i], a.controller, cfg_.gains, cfg_.drone, dt);
      const DroneState next = racer::step(a.drone, ctl.command, cfg_.drone, dt);
      a.controller = ctl.next;

      if (!next.is_finite() || !next.attitude_nominal()) {
        // Diverged or flipped: treated as a crash at the last valid state.
        collided[i] = 1;
        continue;
      }
      const Vec3 prev = a.drone.position;
      a.drone = next;

      if (gate_passed(prev, next.position, track_.gate(a.next_gate))) {
        ++a.gates_passed;
        ++out.facts.gates_passed;
        out.gate_event = true;
        a.next_gate = track_.wrap_index(a.next_gate + 1);
        if (a.next_gate == 0) {
          const double lap_time = t_next - a.lap_start_time;
          out.facts.lap_time = lap_time;
          out.lap_event = true;
          if (!a.first_lap_time) a.first_lap_time = lap_time;
          a.lap_start_time = t_next;
          if (++a.laps_completed >= cfg_.episode.laps) {
            a.finished = true;
            a.finish_time = t_next;
          }
        }
      }

      const double arc = track_.approach_arc(next.position, a.next_gate);
      out.facts.progress += progress_delta(a.arc, arc, track_.total_length());
      a.arc = arc;

      if (hits_environment(next.position)) collided[i] = 1;
    }

    // Drone-drone contacts among drones that were racing during this tick.
    const double min_dist = 2.0 * cfg_.drone.collision_radius;
    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!live[j]) continue;
        if ((race.agents[i].drone.position - race.agents[j].drone.position).norm() < min_dist) {
          collided[i] = collided[j] = 1;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (live[i] && collided[i] && !race.agents[i].crashed) {
        AgentState& a = race.agents[i];
        a.crashed = true;
        ++a.collisions;
        result.agents[i].facts.collision = true;
      }
    }
    race.sim_time = t_next;
  }
  ++race.steps;
  if (race.sim_time >= cfg_.episode.timeout - 1e-9) race.timed_out = true;

  for (std::size_t i = 0; i < n; ++i) {
    AgentState& a = race.agents[i];
    AgentStep& out = result.agents[i];
    if (was_active[i]) {
      out.facts.alignment_angle = alignment_angle(a);
      out.terms = reward_terms(out.facts, cfg_.reward);
      out.reward = out.terms.total(cfg_.reward);
    }
    out.done = !a.active() || race.timed_out;
  }
  // Snapshots are taken after every agent moved so relative positions are consistent.
  std::vector<std::vector<double>> snaps(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (was_active[i]) snaps[i] = snapshot(race, static_cast<int>(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (was_active[i]) race.agents[i].history.push(snaps[i]);
    result.agents[i].observation = observe(race, static_cast<int>(i));
  }
  return result;
}

}  // namespace racer
