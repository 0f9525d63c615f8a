#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace malt {

// Splittable counter-style RNG. A generator is a pure function of a
// (seed, stream, iteration) key, so replaying a run reproduces every draw
// bit-exactly without storing generator state between iterations.
//
// The engine is xoshiro256++ keyed through a splitmix64 hash chain; normals
// come from Box-Muller so the draw sequence does not depend on the standard
// library's distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { *this = stream(seed, 0, 0); }

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id,
                    std::uint64_t iteration) {
    Rng r;
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ stream_id);
    k = mix64(k ^ iteration);
    std::uint64_t sm = k;
    for (auto& word : r.state_) word = splitmix_next(sm);
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; never returns 0 so log() is safe.
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  void fill_normal(std::span<double> out) {
    for (double& x : out) x = normal();
  }

  double exponential() { return -std::log(uniform()); }

 private:
  Rng() = default;

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix_next(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    return mix64(s);
  }

  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace malt
