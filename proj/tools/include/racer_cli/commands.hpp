#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace racer::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    ///< bad arguments, config, checkpoint or log
  kExitRuntime = 2,  ///< failure while running (I/O, training collapse)
};

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutputDirEnv = "RACER_OUTPUT_DIR";

/// --output beats RACER_OUTPUT_DIR beats the config value.
[[nodiscard]] std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& flag,
                                                       const std::string& configured);

struct TrainOptions {
  std::filesystem::path config;
  std::optional<int> stage;  ///< run only this stage
  bool resume = false;
  bool no_selfplay = false;
  std::optional<std::filesystem::path> output;
};

struct EvaluateOptions {
  std::filesystem::path config;
  std::optional<std::string> scenario;
  std::vector<std::string> slots;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<int> laps;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> trajectory;  ///< log run 0 here
};

struct ReplayOptions {
  std::filesystem::path log;
  std::filesystem::path export_dir = "plots";
  std::optional<std::filesystem::path> config;  ///< reject logs from another config
};

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_replay(const ReplayOptions& opt, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace racer::cli
