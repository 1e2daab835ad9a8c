#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "racer/eval.hpp"
#include "racer/trajectory_log.hpp"

namespace racer {
namespace {

std::string recorded_race(const RewardWeights& w) {
  EnvConfig env;
  env.reward = w;
  env.episode.timeout = 4.0;
  std::ostringstream os;
  TrajectoryWriter writer(os, "feedface", w);
  const std::vector<PilotPtr> pilots{std::make_shared<CenterlinePilot>(), std::make_shared<RandomPilot>()};
  (void)run_race(env, pilots, 1, 8, &writer);
  EXPECT_GT(writer.rows(), 0);
  return os.str();
}

// Replaces one field of data row `row` (1-based) in CSV text.
std::string tamper(const std::string& text, long row, int column, const std::string& value) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  long data = -1;
  while (std::getline(is, line)) {
    if (!line.empty() && line.front() != '#') ++data;
    if (data == row) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string x;
      while (std::getline(ss, x, ',')) f.push_back(x);
      f[static_cast<std::size_t>(column)] = value;
      line.clear();
      for (std::size_t i = 0; i < f.size(); ++i) line += (i ? "," : "") + f[i];
    }
    os << line << '\n';
  }
  return os.str();
}

TEST(TrajectoryLog, RoundTripsAndRewardsCheck) {
  RewardWeights w;
  w.alignment_weight = 0.3;
  const std::string text = recorded_race(w);
  std::istringstream is(text);
  const TrajectoryLog log = read_trajectory_log(is);
  EXPECT_EQ(log.config_hash, "feedface");
  EXPECT_EQ(log.weights.alignment_weight, 0.3);
  ASSERT_FALSE(log.records.empty());
  for (const TrajectoryRecord& r : log.records) {
    EXPECT_NEAR(r.reward, r.terms.total(log.weights), 1e-9 * (1.0 + std::abs(r.reward)));
  }
}

TEST(TrajectoryLog, TamperedRewardIsRejectedWithRow) {
  const std::string text = tamper(recorded_race(RewardWeights{}), 5, 23, "123.0");
  std::istringstream is(text);
  try {
    (void)read_trajectory_log(is);
    FAIL() << "tampered reward accepted";
  } catch (const TrajectoryLogError& e) {
    EXPECT_EQ(e.row(), 5);
  }
}

TEST(TrajectoryLog, TimeGoingBackwardsIsRejected) {
  std::istringstream is(tamper(recorded_race(RewardWeights{}), 7, 1, "-1.0"));
  EXPECT_THROW((void)read_trajectory_log(is), TrajectoryLogError);
}

TEST(TrajectoryLog, ShortRowIsRejected) {
  std::string text = recorded_race(RewardWeights{});
  text += "1,2,3\n";
  std::istringstream is(text);
  EXPECT_THROW((void)read_trajectory_log(is), TrajectoryLogError);
}

TEST(TrajectoryLog, EmptyInputIsEmptyLog) {
  std::istringstream is("");
  EXPECT_TRUE(read_trajectory_log(is).records.empty());
  std::istringstream bad("step,time\n");
  EXPECT_THROW((void)read_trajectory_log(bad), TrajectoryLogError);
}

TEST(TrajectoryLog, ExportWritesPerDroneFiles) {
  std::istringstream is(recorded_race(RewardWeights{}));
  const TrajectoryLog log = read_trajectory_log(is);
  const auto dir = std::filesystem::temp_directory_path() / "racer_test_replay";
  std::filesystem::remove_all(dir);
  const ReplaySummary s = export_replay(log, dir);
  EXPECT_EQ(s.rows, static_cast<long>(log.records.size()));
  EXPECT_EQ(s.drones, (std::vector<int>{0, 1}));
  for (const auto& f : s.files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace racer
