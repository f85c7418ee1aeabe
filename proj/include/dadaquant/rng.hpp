#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

namespace dadaquant {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a master seed and a sequence of salts into a stream seed.
/// Used to derive independent per-(purpose, round, client) streams.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> salts) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t s : salts) h = splitmix64(h ^ splitmix64(s));
  return h;
}

// Deterministic random stream. Distribution transforms are hand-rolled
// because the standard library's distributions are implementation-defined,
// which would break cross-toolchain reproducibility of runs.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  static RandomStream derive(std::uint64_t master,
                             std::initializer_list<std::uint64_t> salts) {
    return RandomStream(derive_seed(master, salts));
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, unbiased.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  /// Box-Muller; consumes exactly two uniform draws per call.
  double normal(double mean, double stddev) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return mean + stddev * r * std::cos(6.283185307179586477 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[bounded(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dadaquant
