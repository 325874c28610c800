#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "starmean/normal.hpp"
#include "starmean/point.hpp"

namespace starmean {

// splitmix64 step; used to derive independent per-trial seeds from a master
// seed so serial and parallel execution agree.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic Gaussian source. Box-Muller on top of mt19937_64 so the
// stream depends only on the seed, not on library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    // 53-bit mantissa uniform in (0,1)
    return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  Point normal_vector(std::size_t n, double sigma) {
    Point p(n);
    for (auto& v : p) v = sigma * normal();
    return p;
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace starmean
