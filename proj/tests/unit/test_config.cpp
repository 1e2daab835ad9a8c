#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include "racer/checkpoint.hpp"
#include "racer/config.hpp"

namespace racer {
namespace {

TEST(Config, YamlRoundTrip) {
  const ExperimentConfig d = ExperimentConfig::defaults();
  EXPECT_EQ(parse_config(to_yaml(d)), d);
  ExperimentConfig c = d;
  c.env.track.n_gates = 3;
  c.env.reward.alignment_weight = 0.2;
  c.ppo.learning_rate = 5e-4;
  c.stages.resize(1);
  c.stages[0].promotion_success_ratio = -1.0;
  c.network.hidden = {32, 16, 8};
  c.evaluation.slots = {"scripted:2.5"};
  c.seed = 123456789012345ULL;
  EXPECT_EQ(parse_config(to_yaml(c)), c);
}

TEST(Config, MissingKeysKeepDefaults) {
  const ExperimentConfig c = parse_config("track:\n  n_gates: 4\n");
  EXPECT_EQ(c.env.track.n_gates, 4);
  ExperimentConfig expected = ExperimentConfig::defaults();
  expected.env.track.n_gates = 4;
  EXPECT_EQ(c, expected);
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    (void)parse_config("seed: 2\ntrack:\n  n_gates: 4\n  radiuss: 3.0\n", "exp.yaml");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("exp.yaml:4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("radiuss"), std::string::npos) << msg;
  }
}

TEST(Config, MalformedValuesAreErrors) {
  EXPECT_THROW((void)parse_config("seed: many\n"), ConfigError);
  EXPECT_THROW((void)parse_config("track: [1, 2\n"), ConfigError);
  EXPECT_THROW((void)parse_config("track:\n  n_gates: 2\n"), ConfigError);
  EXPECT_THROW((void)parse_config("reward:\n  collision_penalty: -1\n"), ConfigError);
  EXPECT_THROW((void)parse_config("stages:\n  - stage: 4\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/racer.yaml"), ConfigError);
}

TEST(ConfigHash, StableSixteenHexDigits) {
  const ExperimentConfig d = ExperimentConfig::defaults();
  const std::string h = config_hash(d);
  EXPECT_TRUE(std::regex_match(h, std::regex("[0-9a-f]{16}"))) << h;
  EXPECT_EQ(config_hash(parse_config(to_yaml(d))), h);
}

TEST(ConfigHash, IgnoresOutputAndEvaluation) {
  const ExperimentConfig d = ExperimentConfig::defaults();
  ExperimentConfig c = d;
  c.output_dir = "elsewhere";
  c.evaluation.n_runs = 7;
  EXPECT_EQ(config_hash(c), config_hash(d));
  c.env.reward.gate_bonus = 6.0;
  EXPECT_NE(config_hash(c), config_hash(d));
}

TEST(Config, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "racer_test_cfg" / "c.yaml";
  ExperimentConfig c = ExperimentConfig::defaults();
  c.seed = 99;
  save_config(path, c);
  EXPECT_EQ(load_config(path), c);
  std::filesystem::remove_all(path.parent_path());
}

TEST(Config, ShippedConfigsParse) {
  const std::filesystem::path dir = RACER_CONFIG_DIR;
  const ExperimentConfig d = load_config(dir / "default.yaml");
  EXPECT_EQ(d, ExperimentConfig::defaults());
  EXPECT_EQ(load_config(dir / "mini.yaml").env.track.n_gates, 3);
  EXPECT_NO_THROW((void)load_config(dir / "smoke.yaml"));
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "racer_test_ckpt.ckpt";
  std::mt19937_64 rng(3);
  Checkpoint c;
  c.params = make_race_policy(ObservationConfig{}, NetworkConfig{.hidden = {16, 8}}, rng);
  c.config_hash = "0123456789abcdef";
  c.set_scales(ObservationConfig{});
  save_checkpoint(path, c);
  EXPECT_EQ(load_checkpoint(path), c);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const auto path = std::filesystem::temp_directory_path() / "racer_test_bad.ckpt";
  std::ofstream(path, std::ios::binary) << "NOTAPOLICY";
  EXPECT_THROW((void)load_checkpoint(path), CheckpointError);

  std::mt19937_64 rng(3);
  Checkpoint c;
  c.params = make_race_policy(ObservationConfig{}, NetworkConfig{.hidden = {4}}, rng);
  save_checkpoint(path, c);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 8);
  EXPECT_THROW((void)load_checkpoint(path), CheckpointError);
  EXPECT_THROW((void)load_checkpoint("/nonexistent.ckpt"), CheckpointError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace racer
