#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "racer/observation.hpp"
#include "racer/policy.hpp"

namespace racer {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Policy snapshot as stored on disk.
///
/// Binary layout (little-endian):
///   char[8]  magic "RACERPOL"
///   u32      format version (1)
///   u32 n, char[n]  config hash
///   f64 x4   observation scales: position, velocity, angle, rate
///   u32 n, u32[n]   actor layer sizes (input ... output)
///   u32 n, u32[n]   critic layer sizes
///   u32      action dimension (= log-std length)
///   u64 n, f64[n]   parameters, flattened as actor, log-std, critic
struct Checkpoint {
  static constexpr char kMagic[8] = {'R', 'A', 'C', 'E', 'R', 'P', 'O', 'L'};
  static constexpr std::uint32_t kFormatVersion = 1;

  PolicyParams params;
  std::string config_hash;
  double position_scale = 10.0;
  double velocity_scale = 10.0;
  double angle_scale = 3.141592653589793;
  double rate_scale = 10.0;

  void set_scales(const ObservationConfig& cfg);
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace racer
