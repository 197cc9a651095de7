#include "qhpc/rng.hpp"

#include <cmath>
#include <numbers>

namespace qhpc {

std::uint64_t seed_mix(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double GaussianSampler::next_u01() {
  // 53 uniform mantissa bits in [0, 1).
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double GaussianSampler::next() {
  // Box-Muller, cosine branch only. u1 is nudged away from zero so the log
  // stays finite.
  double u1 = next_u01();
  double u2 = next_u01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace qhpc
