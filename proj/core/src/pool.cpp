#include "racer/pool.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "racer/checkpoint.hpp"

namespace racer {

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kManifestFormat = "racer-pool-v1";

}  // namespace

CheckpointPool::CheckpointPool(std::filesystem::path dir, std::string config_hash, const ObservationConfig& obs)
    : dir_(std::move(dir)), config_hash_(std::move(config_hash)), obs_(obs) {
  if (exists(*dir_)) throw PoolError("a pool already exists in " + dir_->string());
  std::filesystem::create_directories(*dir_);
  write_manifest(entries_, best_version_);
}

bool CheckpointPool::exists(const std::filesystem::path& dir) {
  return std::filesystem::exists(dir / kManifest);
}

std::string CheckpointPool::checkpoint_name(int version) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "policy_v%04d.ckpt", version);
  return buf;
}

std::filesystem::path CheckpointPool::checkpoint_path(int version) const {
  if (!dir_) throw PoolError("in-memory pool has no checkpoint files");
  return *dir_ / checkpoint_name(version);
}

const PoolEntry& CheckpointPool::best() const {
  for (const PoolEntry& e : entries_) {
    if (e.version == best_version_) return e;
  }
  throw PoolError("the pool is empty");
}

int CheckpointPool::append(const PolicyParams& params, const PoolMetrics& metrics) {
  const int version = entries_.empty() ? 1 : entries_.back().version + 1;
  PoolEntry entry{version, std::make_shared<const PolicyParams>(params), metrics};
  if (dir_) {
    Checkpoint ckpt;
    ckpt.params = params;
    ckpt.config_hash = config_hash_;
    ckpt.set_scales(obs_);
    try {
      save_checkpoint(checkpoint_path(version), ckpt);
      std::vector<PoolEntry> next = entries_;
      next.push_back(entry);
      write_manifest(next, version);
    } catch (const std::exception& e) {
      throw PoolError(std::string("failed to persist pool version ") + std::to_string(version) + ": " + e.what());
    }
  }
  entries_.push_back(std::move(entry));
  best_version_ = version;
  return version;
}

void CheckpointPool::write_manifest(const std::vector<PoolEntry>& entries, int best) const {
  nlohmann::json j;
  j["format"] = kManifestFormat;
  j["config_hash"] = config_hash_;
  j["best_version"] = best;
  j["observation_scales"] = {obs_.position_scale, obs_.velocity_scale, obs_.angle_scale, obs_.rate_scale};
  j["versions"] = nlohmann::json::array();
  for (const PoolEntry& e : entries) {
    const PoolMetrics& m = e.metrics;
    j["versions"].push_back({{"version", e.version},
                             {"file", checkpoint_name(e.version)},
                             {"stage", m.stage},
                             {"step", m.step},
                             {"win_rate", m.win_rate},
                             {"success_ratio", m.success_ratio},
                             {"mean_lap_time", m.mean_lap_time ? nlohmann::json(*m.mean_lap_time) : nlohmann::json(nullptr)}});
  }
  const std::filesystem::path path = *dir_ / kManifest;
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw PoolError("cannot write " + tmp.string());
    os << j.dump(2) << '\n';
    if (!os) throw PoolError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointPool CheckpointPool::open(const std::filesystem::path& dir, const std::string& expected_hash) {
  const std::filesystem::path path = dir / kManifest;
  std::ifstream is(path);
  if (!is) throw PoolError("no pool manifest at " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw PoolError("malformed pool manifest " + path.string() + ": " + e.what());
  }

  CheckpointPool pool;
  try {
    if (j.at("format").get<std::string>() != kManifestFormat) throw PoolError("unknown pool manifest format");
    pool.dir_ = dir;
    pool.config_hash_ = j.at("config_hash").get<std::string>();
    const auto scales = j.at("observation_scales").get<std::vector<double>>();
    if (scales.size() != 4) throw PoolError("manifest must list four observation scales");
    pool.obs_.position_scale = scales[0];
    pool.obs_.velocity_scale = scales[1];
    pool.obs_.angle_scale = scales[2];
    pool.obs_.rate_scale = scales[3];
    if (!expected_hash.empty() && pool.config_hash_ != expected_hash) {
      throw PoolError("pool in " + dir.string() + " was built with config " + pool.config_hash_ +
                      " but the current config is " + expected_hash);
    }
    int previous = 0;
    for (const auto& v : j.at("versions")) {
      PoolEntry e;
      e.version = v.at("version").get<int>();
      if (e.version <= previous) throw PoolError("pool versions are not strictly increasing");
      previous = e.version;
      e.metrics.stage = v.at("stage").get<int>();
      e.metrics.step = v.at("step").get<long long>();
      e.metrics.win_rate = v.at("win_rate").get<double>();
      e.metrics.success_ratio = v.at("success_ratio").get<double>();
      if (!v.at("mean_lap_time").is_null()) e.metrics.mean_lap_time = v.at("mean_lap_time").get<double>();
      Checkpoint ckpt = load_checkpoint(dir / v.at("file").get<std::string>());
      if (ckpt.config_hash != pool.config_hash_) {
        throw PoolError("checkpoint for version " + std::to_string(e.version) + " has a different config hash");
      }
      e.params = std::make_shared<const PolicyParams>(std::move(ckpt.params));
      pool.entries_.push_back(std::move(e));
    }
    pool.best_version_ = j.at("best_version").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw PoolError("malformed pool manifest " + path.string() + ": " + e.what());
  } catch (const CheckpointError& e) {
    throw PoolError(std::string("pool checkpoint unreadable: ") + e.what());
  }
  if (!pool.entries_.empty()) (void)pool.best();
  else if (pool.best_version_ != 0) throw PoolError("empty pool names a best version");
  return pool;
}

}  // namespace racer
