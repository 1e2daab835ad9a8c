#include "racer/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace racer {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void Checkpoint::set_scales(const ObservationConfig& cfg) {
  position_scale = cfg.position_scale;
  velocity_scale = cfg.velocity_scale;
  angle_scale = cfg.angle_scale;
  rate_scale = cfg.rate_scale;
}

namespace {

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
  }
  return value;
}

void put_sizes(std::ostream& os, const std::vector<int>& sizes) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) put<std::uint32_t>(os, static_cast<std::uint32_t>(s));
}

std::vector<int> get_sizes(std::istream& is, const char* what) {
  const auto n = get<std::uint32_t>(is, what);
  if (n < 2 || n > 64) throw CheckpointError(std::string("implausible layer count for ") + what);
  std::vector<int> sizes(n);
  for (auto& s : sizes) {
    const auto v = get<std::uint32_t>(is, what);
    if (v == 0 || v > (1u << 20)) throw CheckpointError(std::string("implausible layer size for ") + what);
    s = static_cast<int>(v);
  }
  return sizes;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    os.write(Checkpoint::kMagic, sizeof(Checkpoint::kMagic));
    put<std::uint32_t>(os, Checkpoint::kFormatVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.config_hash.size()));
    os.write(ckpt.config_hash.data(), static_cast<std::streamsize>(ckpt.config_hash.size()));
    put<double>(os, ckpt.position_scale);
    put<double>(os, ckpt.velocity_scale);
    put<double>(os, ckpt.angle_scale);
    put<double>(os, ckpt.rate_scale);
    put_sizes(os, ckpt.params.actor.sizes());
    put_sizes(os, ckpt.params.critic.sizes());
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.params.log_std.size()));
    const Eigen::VectorXd flat = ckpt.params.to_vector();
    put<std::uint64_t>(os, static_cast<std::uint64_t>(flat.size()));
    os.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!os) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[sizeof(Checkpoint::kMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, Checkpoint::kMagic, sizeof(magic)) != 0) {
    throw CheckpointError(path.string() + " is not a policy checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(is, "version");
  if (version != Checkpoint::kFormatVersion) {
    throw CheckpointError("unsupported checkpoint format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto hash_len = get<std::uint32_t>(is, "config hash length");
  if (hash_len > 256) throw CheckpointError("implausible config hash length");
  ckpt.config_hash.resize(hash_len);
  if (!is.read(ckpt.config_hash.data(), hash_len)) throw CheckpointError("truncated checkpoint config hash");
  ckpt.position_scale = get<double>(is, "scales");
  ckpt.velocity_scale = get<double>(is, "scales");
  ckpt.angle_scale = get<double>(is, "scales");
  ckpt.rate_scale = get<double>(is, "scales");
  const std::vector<int> actor_sizes = get_sizes(is, "actor");
  const std::vector<int> critic_sizes = get_sizes(is, "critic");
  const auto action_dim = get<std::uint32_t>(is, "action dimension");
  if (static_cast<int>(action_dim) != actor_sizes.back() || critic_sizes.back() != 1 ||
      critic_sizes.front() != actor_sizes.front()) {
    throw CheckpointError("inconsistent checkpoint dimension header");
  }
  ckpt.params.actor = Mlp(actor_sizes);
  ckpt.params.critic = Mlp(critic_sizes);
  ckpt.params.log_std = Eigen::VectorXd::Zero(action_dim);
  const auto count = get<std::uint64_t>(is, "parameter count");
  if (count != static_cast<std::uint64_t>(ckpt.params.num_params())) {
    throw CheckpointError("checkpoint parameter count does not match its dimension header");
  }
  Eigen::VectorXd flat(static_cast<Eigen::Index>(count));
  if (!is.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
    throw CheckpointError("truncated checkpoint payload");
  }
  if (!flat.allFinite()) throw CheckpointError("checkpoint contains non-finite weights");
  ckpt.params.from_vector(flat);
  return ckpt;
}

}  // namespace racer
