#pragma once

// Seeded randomness with a fixed, portable definition: the 64-bit Mersenne
// Twister (whose output sequence the standard specifies exactly) plus our
// own range reduction, since std:: distributions differ across libraries.

#include <cstdint>
#include <random>
#include <stdexcept>

namespace vessel::harness {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, n) by rejection of the biased tail.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below(0)");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);  // multiple of n
    for (;;) {
      const std::uint64_t v = gen_();
      if (v < limit) return v % n;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace vessel::harness
