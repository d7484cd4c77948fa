#pragma once

#include <cmath>
#include <cstdint>

namespace stripnet {

// Splittable counter generator built on SplitMix64 mixing. Output i depends
// only on (key, i), so substreams are cheap to derive and every stream
// reproduces bit-for-bit from a single 64-bit seed on any platform.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ 0x9E3779B97F4A7C15ull) ^
             mix(stream * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull)) {}

  std::uint64_t next_u64() { return mix(key_ + ++ctr_ * 0x9E3779B97F4A7C15ull); }

  // uniform on [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  double normal(double mean, double sd) {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(6.28318530717958647692 * u2);
  }

  // Independent stream; safe to call repeatedly with distinct indices.
  CounterRng substream(std::uint64_t idx) const {
    CounterRng r(0);
    r.key_ = mix(key_ ^ mix(idx + 0x9E3779B97F4A7C15ull));
    r.ctr_ = 0;
    return r;
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace stripnet
