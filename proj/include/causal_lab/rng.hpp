#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace causal_lab {

// Seeded RNG with explicit, implementation-independent distributions so that
// identical seeds give identical samples on every platform and standard
// library. std:: distributions are deliberately avoided.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection over the top range to avoid modulo bias.
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  // Poisson by inversion for small lambda, normal approximation splitting for
  // large lambda via repeated halving (keeps exact integer semantics).
  std::uint64_t poisson(double lambda) {
    std::uint64_t total = 0;
    while (lambda > 500.0) {
      // Split: Poisson(a + b) = Poisson(a) + Poisson(b) independently.
      total += poisson_small(250.0);
      lambda -= 250.0;
    }
    return total + poisson_small(lambda);
  }

 private:
  std::uint64_t poisson_small(double lambda) {
    if (lambda <= 0.0) return 0;
    const double l = std::exp(-lambda);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    return k - 1;
  }

  std::mt19937_64 engine_;
};

}  // namespace causal_lab
