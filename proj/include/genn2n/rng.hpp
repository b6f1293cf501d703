#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace genn2n {

// splitmix64 finalizer; used as a mixer for seed derivation and to whiten
// user-provided seeds before feeding mt19937_64.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t seed_combine(uint64_t a, uint64_t b) {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ull));
}

inline uint64_t seed_combine(uint64_t a, uint64_t b, uint64_t c) {
  return seed_combine(seed_combine(a, b), c);
}

// Deterministic RNG. mt19937_64 output is pinned by the standard; the
// uniform/gaussian mappings below are implemented by hand so streams are
// reproducible across standard libraries (std::*_distribution is not).
class Rng {
 public:
  explicit Rng(uint64_t seed) : token_(seed), gen_(mix64(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1) with 53-bit resolution
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n); n > 0
  uint64_t uniform_int(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;  // rejection: no modulo bias
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // standard normal via Box-Muller (no cached spare: keeps the stream a
  // pure function of the draw count)
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Independent child stream; derivation depends on the parent seed only,
  // not on how much of the parent stream has been consumed.
  Rng substream(uint64_t tag) const { return Rng(seed_combine(token_, tag)); }

 private:
  uint64_t token_;
  std::mt19937_64 gen_;
};

}  // namespace genn2n
