#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "racer/env.hpp"
#include "racer/policy.hpp"
#include "racer/ppo.hpp"
#include "racer/selfplay.hpp"

namespace racer {

/// Raised for unreadable, malformed or invalid configuration. The message is
/// prefixed with "file:line:column" when the position is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0) : std::runtime_error(what), line_(line) {}
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

struct EvaluationSettings {
  int n_runs = 50;
  int laps = 1;
  std::string scenario = "solo";
  std::uint64_t seed = 0;
  std::vector<std::string> slots;

  bool operator==(const EvaluationSettings&) const = default;
};

struct ExperimentConfig {
  EnvConfig env;
  NetworkConfig network;
  PpoConfig ppo;
  std::vector<StageConfig> stages;
  EvaluationSettings evaluation;
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";

  /// Default track, three stages, default evaluation settings.
  [[nodiscard]] static ExperimentConfig defaults();
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses YAML. Missing keys keep their defaults; unknown keys are errors.
[[nodiscard]] ExperimentConfig parse_config(const std::string& yaml, const std::string& source = "<config>");
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical YAML listing every field; parse_config(to_yaml(c)) == c.
[[nodiscard]] std::string to_yaml(const ExperimentConfig& cfg);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

/// First 16 hex digits of the SHA-256 of the canonical YAML, ignoring
/// output_dir and the evaluation section.
[[nodiscard]] std::string config_hash(const ExperimentConfig& cfg);

}  // namespace racer
