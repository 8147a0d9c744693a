#pragma once

#include <cstdint>
#include <random>

#include "udset/geometry.hpp"

namespace udset {

// splitmix64 scramble; used to derive independent stream seeds so that shard
// k of a parallel job sees the same sequence regardless of worker count.
inline uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// mt19937_64 with hand-rolled real distributions: the engine's output is
// pinned by the standard, the library distributions are not, and runs must
// be bit-identical for a given seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(mix_seed(seed)) {}
  Rng(uint64_t seed, uint64_t stream) : eng_(mix_seed(mix_seed(seed) ^ stream)) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Uniform over {0, ..., n-1} by rejection; n must be positive.
  uint64_t below(uint64_t n) {
    const uint64_t lim = ~uint64_t{0} - ~uint64_t{0} % n;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= lim);
    return v % n;
  }

  // Uniform in the open ball B(center, r) by rejection in the cube.
  Pt in_ball(const Pt& center, double r) {
    Pt p(center.dim);
    for (;;) {
      double s = 0.0;
      for (int i = 0; i < center.dim; ++i) {
        p[i] = uniform(-1.0, 1.0);
        s += p[i] * p[i];
      }
      if (s < 1.0) break;
    }
    for (int i = 0; i < center.dim; ++i) p[i] = center[i] + r * p[i];
    return p;
  }

  // Uniform direction on the unit sphere.
  Pt direction(int dim) {
    for (;;) {
      Pt p(dim);
      double s = 0.0;
      for (int i = 0; i < dim; ++i) {
        p[i] = uniform(-1.0, 1.0);
        s += p[i] * p[i];
      }
      if (s > 1e-12 && s < 1.0) {
        const double inv = 1.0 / std::sqrt(s);
        for (int i = 0; i < dim; ++i) p[i] *= inv;
        return p;
      }
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace udset
