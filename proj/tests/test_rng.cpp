#include <set>

#include "doctest.h"
#include "vsbbm/rng.hpp"

using namespace vsbbm;

namespace {
// Reference vectors use ctr = {c0, c1, c2, c3}, key = {k0, k1}; the generator
// packs counter into c0/c1, stream into c2/c3.
Philox4x32::Block kat(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3, std::uint32_t k0,
                      std::uint32_t k1) {
  const Philox4x32 g((std::uint64_t{k1} << 32) | k0);
  return g((std::uint64_t{c3} << 32) | c2, (std::uint64_t{c1} << 32) | c0);
}
}  // namespace

TEST_CASE("philox known answers") {
  using B = Philox4x32::Block;
  CHECK(kat(0, 0, 0, 0, 0, 0) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(kat(~0u, ~0u, ~0u, ~0u, ~0u, ~0u) == B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(kat(0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344, 0xa4093822, 0x299f31d0) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("replicate keys are distinct") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    for (std::uint64_t i = 0; i < 1000; ++i) keys.insert(replicate_key(seed, i));
  }
  CHECK(keys.size() == 3000);
}

TEST_CASE("counter stream moments") {
  CounterStream s(7, 3);
  double sum = 0.0;
  double sq = 0.0;
  double u = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
    const double v = s.uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    u += v;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(u / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("counter stream is reproducible") {
  CounterStream a(11, 5);
  CounterStream b(11, 5);
  CounterStream c(11, 6);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs = differs || x != c.uniform();
  }
  CHECK(differs);
}
