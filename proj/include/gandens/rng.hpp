#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gandens {

// Seeded random source with derivable sub-streams.  All floating-point
// draws are built from the raw 64-bit output of std::mt19937_64, so runs
// are bit-reproducible across platforms for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(mix(seed)), engine_(root_) {}

  // Independent stream derived from (seed, id); used to give concurrent
  // workers their own deterministic source.
  Rng child(std::uint64_t id) const {
    return Rng(root_ ^ (0x9e3779b97f4a7c15ULL + id * 0xbf58476d1ce4e5b9ULL));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; one value per call, spare cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform01();
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * M_PI * v);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * v);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();  // rejection keeps the draw unbiased
    return x % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t root_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gandens
