#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace vsbbm {

/// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output is a pure
/// function of (key, counter), so any particle can draw its n-th block of
/// randomness without coordinating with anything else.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit constexpr Philox4x32(std::uint64_t key)
      : k0_(static_cast<std::uint32_t>(key)), k1_(static_cast<std::uint32_t>(key >> 32)) {}

  constexpr Block operator()(std::uint64_t stream, std::uint64_t counter) const {
    Block c{static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t k0 = k0_;
    std::uint32_t k1 = k1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return c;
  }

 private:
  std::uint32_t k0_;
  std::uint32_t k1_;
};

/// SplitMix64 finalizer; used to derive keys and lineage ids.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Key for replicate `index` under master seed `seed`.
constexpr std::uint64_t replicate_key(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// Uniform in (0, 1): never returns 0, so logs are finite.
inline double open_uniform(std::uint32_t bits) { return (static_cast<double>(bits) + 0.5) * 0x1p-32; }

/// Standard normal from two 32-bit words (Box-Muller, cosine branch).
inline double box_muller(std::uint32_t a, std::uint32_t b) {
  const double r = std::sqrt(-2.0 * std::log(open_uniform(a)));
  return r * std::cos(2.0 * std::numbers::pi * open_uniform(b));
}

/// Sequential convenience stream over a Philox key, for oracles and
/// synthetic data rather than the particle engine.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream) : gen_(mix64(seed)), stream_(stream) {}

  double uniform() {
    if (used_ == 4) refill();
    return open_uniform(block_[used_++]);
  }
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  double exponential() { return -std::log(uniform()); }

 private:
  void refill() {
    block_ = gen_(stream_, counter_++);
    used_ = 0;
  }

  Philox4x32 gen_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Philox4x32::Block block_{};
  int used_ = 4;
};

}  // namespace vsbbm
