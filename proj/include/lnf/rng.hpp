#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lnf {

// Counter-based deterministic generator keyed by (seed, stream). Each draw is
// a pure function of (key, counter), so sequences are identical on every
// platform and streams can be assigned per sample index for parallel
// generation. Gaussian variates use Box-Muller on the uniform stream.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream) : key_(derive_key(seed, stream)) {}

  uint64_t next_u64() { return mix(key_, ctr_++); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // 0 <= result < n
  uint64_t below(uint64_t n) { return next_u64() % n; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // 1-u keeps the log argument in (0, 1].
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static uint64_t mix(uint64_t key, uint64_t ctr) {
    uint64_t z = key + 0x9e3779b97f4a7c15ull * (ctr + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static uint64_t derive_key(uint64_t seed, uint64_t stream) {
    return mix(mix(seed, 0x5851f42d4c957f2dull), stream);
  }

  uint64_t key_;
  uint64_t ctr_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lnf
