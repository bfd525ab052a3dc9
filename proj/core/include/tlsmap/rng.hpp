#pragma once

#include <cmath>
#include <cstdint>

namespace tlsmap {

// splitmix64: tiny, high-quality 64-bit mixer. Used both as a stream RNG and
// as a stateless hash of (seed, counter) tuples so that noise drawn for a
// given pixel never depends on evaluation order or thread count.
inline uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64_next(s);
}

// Sequential generator with explicit state. Distribution helpers are
// implemented here rather than with std::uniform_real_distribution so that
// streams are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1): 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Box-Muller; one value per call, the partner draw is discarded to keep
  // the stream position a simple function of the call count.
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTau * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    // Multiply-shift rejection-free mapping; bias is < 2^-64 and irrelevant
    // for simulation purposes.
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

 private:
  static constexpr double kTau = 6.283185307179586476925286766559;
  uint64_t state_;
};

// Stateless normal deviate addressed by (seed, a, b). Two fresh 64-bit words
// are derived by hashing, then fed through Box-Muller.
inline double counter_normal(uint64_t seed, uint64_t a, uint64_t b) {
  uint64_t s = mix64(mix64(seed, a), b);
  uint64_t w1 = splitmix64_next(s);
  uint64_t w2 = splitmix64_next(s);
  double u1 = static_cast<double>(w1 >> 11) * 0x1.0p-53;
  double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace tlsmap
