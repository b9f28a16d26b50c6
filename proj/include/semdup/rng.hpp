#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace semdup {

// splitmix64 finalizer; used for seeding and for key derivation.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

// Derives an independent stream seed from a root seed, a label (typically a
// command or component name) and a stream index:
//   seed = mix64(mix64(root ^ fnv1a64(label)) + index * 0x9E3779B97F4A7C15)
std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0);

// xoshiro256** 1.0 (Blackman & Vigna). State is filled from splitmix64(seed).
// Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

// Variate generation on top of Xoshiro256. The algorithms are fixed here
// (not delegated to <random> distributions, whose output is
// implementation-defined) so streams are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Uniform integer on [0, n), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via the Marsaglia polar method (spare value cached).
  double normal();

  // Gamma(shape, 1) via Marsaglia & Tsang, with the shape < 1 boost.
  double gamma(double shape);

  // Beta(a, b) as G_a / (G_a + G_b).
  double beta(double a, double b);

  Xoshiro256& engine() { return engine_; }

 private:
  Xoshiro256 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace semdup
