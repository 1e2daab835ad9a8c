#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "racer/env.hpp"
#include "racer/policy.hpp"

namespace {

// One iteration = one physics tick for each of four drones.
void BM_PhysicsSubstep4(benchmark::State& state) {
  const racer::DroneParams params;
  const racer::PidGains gains;
  std::vector<racer::DroneState> drones(4);
  std::vector<racer::ControllerState> ctl(4);
  std::vector<racer::Setpoint> sp(4);
  for (int i = 0; i < 4; ++i) {
    drones[i].position = racer::Vec3(i, 0.0, 1.5);
    sp[i].target_position = racer::Vec3(i + 1.0, 0.5, 1.8);
  }
  for (auto _ : state) {
    for (int i = 0; i < 4; ++i) {
      const racer::ControlOutput out = racer::control_step(drones[i], sp[i], ctl[i], gains, params);
      ctl[i] = out.next;
      drones[i] = racer::step(drones[i], out.command, params);
    }
    benchmark::DoNotOptimize(drones.data());
  }
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_PhysicsSubstep4);

void BM_EnvStep4(benchmark::State& state) {
  const racer::RaceEnv env(racer::EnvConfig{});
  racer::RaceState race = env.reset(4, 1);
  std::vector<racer::Setpoint> sp(4);
  for (auto _ : state) {
    if (race.all_done()) race = env.reset(4, 1);
    for (int i = 0; i < 4; ++i) {
      const auto& d = race.agents[static_cast<std::size_t>(i)].drone;
      sp[static_cast<std::size_t>(i)] = {d.position + racer::Vec3(0.5, 0.0, 0.0), d.attitude.z()};
    }
    benchmark::DoNotOptimize(env.step(race, sp));
  }
  state.SetItemsProcessed(state.iterations() * 4 * env.config().episode.substeps);
}
BENCHMARK(BM_EnvStep4);

void BM_PolicyForward(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const racer::PolicyParams p = racer::make_policy(82, 4, racer::NetworkConfig{}, rng);
  const Eigen::VectorXd obs = Eigen::VectorXd::Random(82);
  for (auto _ : state) benchmark::DoNotOptimize(racer::policy_forward(p, obs));
}
BENCHMARK(BM_PolicyForward);

}  // namespace
BENCHMARK_MAIN();
