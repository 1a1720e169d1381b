#pragma once

#include <cstdint>
#include <random>

namespace pinnfm {

/// Independent random streams derived from one run seed.
enum class RngStream : std::uint64_t {
  kInit = 1,
  kCollocation = 2,
  kEigen = 3,
};

/// mt19937_64 keyed by (seed, stream). Uniform draws are built from raw
/// engine bits so sequences are identical across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, RngStream stream, std::uint64_t index = 0)
      : engine_(mix(seed, static_cast<std::uint64_t>(stream), index)) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream * 0xD1B54A32D192ED03ULL +
                      index * 0x8CB92BA72F3D8DD7ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace pinnfm
