#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qhpc {

// Mix a scenario seed with a per-entity tag (e.g. a resource id) into an
// independent stream seed. FNV-1a over the tag, then a splitmix64 finalizer.
std::uint64_t seed_mix(std::uint64_t seed, std::string_view tag);

/// Deterministic standard-normal sampler. std::normal_distribution is
/// implementation-defined, so golden trajectories pinned in tests would not
/// survive a standard-library change; Box-Muller over explicit 53-bit
/// uniforms is fully specified arithmetic and reproduces everywhere.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

  /// One N(0,1) draw. Consumes exactly two generator outputs.
  double next();

 private:
  double next_u01();

  std::mt19937_64 gen_;
};

}  // namespace qhpc
