#pragma once

#include <cmath>
#include <cstdint>

namespace opensense {

// SplitMix64 (Steele, Lea, Flood 2014). All randomness in the project flows
// through this generator so that a run is fully determined by one user seed.
// Sub-streams are derived with `derive(seed, tag)`, one tag per subsystem.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi], inclusive. Modulo bias is below 2^-50 for
  // the ranges used here (all well under 2^32).
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller, consuming exactly two draws per call.
  double normal(double mean, double stddev) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586 * u2);
  }

  // Derive a decorrelated sub-stream seed for subsystem `tag`.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    SplitMix64 g(seed ^ (tag * 0xD1B54A32D192ED03ull));
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace opensense
