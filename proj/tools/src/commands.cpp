#include "racer_cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "racer/checkpoint.hpp"
#include "racer/config.hpp"
#include "racer/eval.hpp"
#include "racer/pool.hpp"
#include "racer/selfplay.hpp"
#include "racer/trajectory_log.hpp"

namespace racer::cli {

namespace fs = std::filesystem;

fs::path resolve_output_dir(const std::optional<fs::path>& flag, const std::string& configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return configured;
}

namespace {

bool load(const fs::path& path, ExperimentConfig& cfg, std::ostream& err) {
  try {
    cfg = load_config(path);
    return true;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return false;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::uint64_t stage_seed(std::uint64_t seed, int stage) { return seed * 1000003ULL + static_cast<std::uint64_t>(stage); }

}  // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  if (!load(opt.config, cfg, err)) return kExitUsage;
  if (opt.stage && (*opt.stage < 1 || *opt.stage > 3)) {
    err << "error: --stage must be 1, 2 or 3\n";
    return kExitUsage;
  }
  std::vector<StageConfig> stages;
  for (const StageConfig& s : cfg.stages) {
    if (!opt.stage || s.stage == *opt.stage) stages.push_back(s);
  }
  if (stages.empty()) {
    err << "error: the config schedules no matching stage\n";
    return kExitUsage;
  }

  const std::string hash = config_hash(cfg);
  const fs::path out_dir = resolve_output_dir(opt.output, cfg.output_dir);
  const fs::path pool_dir = out_dir / "pool";
  const OpponentMode mode = opt.no_selfplay ? OpponentMode::kFixedRandom : OpponentMode::kSelfPlay;

  try {
    CheckpointPool pool;
    PolicyParams policy;
    if (opt.resume) {
      if (!CheckpointPool::exists(pool_dir)) {
        err << "error: nothing to resume, no pool manifest in " << pool_dir.string() << '\n';
        return kExitUsage;
      }
      try {
        pool = CheckpointPool::open(pool_dir, hash);
      } catch (const PoolError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
      }
      if (pool.empty()) {
        Rng rng(cfg.seed);
        policy = make_race_policy(cfg.env.observation, cfg.network, rng);
      } else {
        policy = *pool.best().params;
        if (!opt.stage) {
          const int from = pool.best().metrics.stage;
          std::erase_if(stages, [from](const StageConfig& s) { return s.stage < from; });
        }
      }
      out << "resuming from pool version " << pool.best_version() << '\n';
    } else {
      if (CheckpointPool::exists(pool_dir)) {
        err << "error: " << pool_dir.string() << " already holds a pool; pass --resume to continue it\n";
        return kExitUsage;
      }
      fs::create_directories(out_dir);
      pool = CheckpointPool(pool_dir, hash, cfg.env.observation);
      Rng rng(cfg.seed);
      policy = make_race_policy(cfg.env.observation, cfg.network, rng);
    }
    save_config(out_dir / "config.yaml", cfg);
    write_text(out_dir / "config_hash.txt", hash + "\n");

    const fs::path log_path = out_dir / "training_log.csv";
    const bool new_log = !fs::exists(log_path);
    std::ofstream log(log_path, std::ios::app);
    if (!log) throw std::runtime_error("cannot write " + log_path.string());
    if (new_log) log << "# config_hash: " << hash << '\n' << training_log_header() << '\n';

    out << "config " << hash << "  output " << out_dir.string()
        << (opt.no_selfplay ? "  opponents: random (no self-play)" : "") << '\n';
    for (const StageConfig& stage : stages) {
      if (stage.stage > 1) {
        seed_pool(pool, policy, cfg.env, stage.n_eval, stage.stage - 1, stage_seed(cfg.seed, stage.stage) + 17);
      }
      out << "stage " << stage.stage << ": budget " << stage.budget << " env steps\n";
      auto progress = [&](const TrainingLogEntry& e) {
        log << training_log_row(stage.stage, e) << '\n';
        log.flush();
        out << "  step " << e.step << "  episodes " << e.episodes << "  mean reward "
            << (e.mean_episode_reward ? std::to_string(*e.mean_episode_reward) : std::string("-"));
        if (e.gate) {
          out << "  gate win " << e.gate->win_rate << " success " << e.gate->success_ratio
              << (e.gate->improved ? " (saved)" : "");
        }
        out << '\n';
      };
      StageResult res = run_stage(stage, policy, pool, cfg.ppo, cfg.env, stage_seed(cfg.seed, stage.stage), mode,
                                  progress);
      policy = std::move(res.policy);
      Checkpoint ckpt;
      ckpt.params = policy;
      ckpt.config_hash = hash;
      ckpt.set_scales(cfg.env.observation);
      save_checkpoint(out_dir / ("final_stage" + std::to_string(stage.stage) + ".ckpt"), ckpt);
      if (res.collapsed) {
        err << "error: stage " << stage.stage << " collapsed: " << res.diagnostic << '\n';
        return kExitRuntime;
      }
      out << "stage " << stage.stage << " done after " << res.steps << " steps"
          << (res.promoted ? " (promotion criterion met)" : "") << ", pool best v" << pool.best_version() << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  if (!load(opt.config, cfg, err)) return kExitUsage;
  const std::string hash = config_hash(cfg);

  EvalConfig ec;
  std::vector<PilotPtr> pilots;
  try {
    ec.n_runs = opt.runs.value_or(cfg.evaluation.n_runs);
    ec.scenario = parse_scenario(opt.scenario.value_or(cfg.evaluation.scenario));
    ec.slots = opt.slots.empty() ? cfg.evaluation.slots : opt.slots;
    ec.base_seed = opt.seed.value_or(cfg.evaluation.seed);
    ec.laps = opt.laps.value_or(cfg.evaluation.laps);
    ec.validate();
    for (const std::string& s : ec.slots) pilots.push_back(make_pilot(s, cfg.env, hash));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const EvalResult result = run_evaluation(ec, cfg.env, pilots, hash);
    const fs::path dir = resolve_output_dir(opt.output, cfg.output_dir) / "evaluation";
    fs::create_directories(dir);
    write_text(dir / "report.json", result.report.to_json() + "\n");
    write_text(dir / "report.txt", result.report.to_table());
    {
      std::ofstream os(dir / "records.csv", std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write " + (dir / "records.csv").string());
      os << "# config_hash: " << hash << '\n';
      write_records_csv(os, result.records);
    }
    if (opt.trajectory) {
      if (opt.trajectory->has_parent_path()) fs::create_directories(opt.trajectory->parent_path());
      std::ofstream os(*opt.trajectory, std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write " + opt.trajectory->string());
      TrajectoryWriter writer(os, hash, cfg.env.reward);
      (void)run_race(cfg.env, pilots, ec.laps, ec.base_seed, &writer);
    }
    out << result.report.to_table();
    out << "reports written to " << dir.string() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_replay(const ReplayOptions& opt, std::ostream& out, std::ostream& err) {
  TrajectoryLog log;
  try {
    log = read_trajectory_log(opt.log);
  } catch (const TrajectoryLogError& e) {
    err << "error: " << opt.log.string() << ": " << e.what() << '\n';
    return kExitUsage;
  }
  if (opt.config) {
    ExperimentConfig cfg;
    if (!load(*opt.config, cfg, err)) return kExitUsage;
    const std::string hash = config_hash(cfg);
    if (!log.records.empty() && log.config_hash != hash) {
      err << "error: log was written with config " << log.config_hash << " but the config hashes to " << hash << '\n';
      return kExitUsage;
    }
  }
  try {
    const ReplaySummary summary = export_replay(log, opt.export_dir);
    out << summary.rows << " rows, " << summary.drones.size() << " drones\n";
    for (int d : summary.drones) {
      int gates = 0;
      for (const TrajectoryRecord& r : log.records) gates += (r.drone == d && r.gate_pass) ? 1 : 0;
      out << "  drone " << d << ": " << gates << " gate passes\n";
    }
    for (const fs::path& f : summary.files) out << "  wrote " << f.string() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-drone racing simulator with self-play PPO training"};
  app.require_subcommand(1);

  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Run the stage schedule and grow the opponent pool");
  train_cmd->add_option("config", train.config, "YAML config file")->required();
  train_cmd->add_option("--stage", train.stage, "Run only this stage (1, 2 or 3)");
  train_cmd->add_flag("--resume", train.resume, "Continue from the pool in the output directory");
  train_cmd->add_flag("--no-selfplay", train.no_selfplay, "Race against random pilots instead of the pool");
  train_cmd->add_option("--output", train.output, "Output directory (overrides RACER_OUTPUT_DIR and the config)");

  EvaluateOptions eval;
  std::string slots_csv;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Run seeded evaluation races and write reports");
  eval_cmd->add_option("config", eval.config, "YAML config file")->required();
  eval_cmd->add_option("--scenario", eval.scenario, "solo, 1v1 or 2v2");
  eval_cmd->add_option("--slots", slots_csv,
                       "Comma-separated pilots per slot: checkpoint path, random, scripted[:speed], hover, crash");
  eval_cmd->add_option("--runs", eval.runs, "Number of runs");
  eval_cmd->add_option("--seed", eval.seed, "Base seed; run i uses seed + i");
  eval_cmd->add_option("--laps", eval.laps, "Laps per run");
  eval_cmd->add_option("--output", eval.output, "Output directory (overrides RACER_OUTPUT_DIR and the config)");
  eval_cmd->add_option("--trajectory", eval.trajectory, "Write the trajectory log of run 0 to this file");

  ReplayOptions replay;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Validate a trajectory log and export plot data");
  replay_cmd->add_option("log", replay.log, "Trajectory log")->required();
  replay_cmd->add_option("--export-plots", replay.export_dir, "Directory for the plot-data files");
  replay_cmd->add_option("--config", replay.config, "Reject logs written with a different config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*train_cmd) return cmd_train(train, out, err);
  if (*eval_cmd) {
    if (!slots_csv.empty()) {
      std::stringstream ss(slots_csv);
      std::string item;
      while (std::getline(ss, item, ',')) eval.slots.push_back(item);
    }
    return cmd_evaluate(eval, out, err);
  }
  return cmd_replay(replay, out, err);
}

}  // namespace racer::cli
