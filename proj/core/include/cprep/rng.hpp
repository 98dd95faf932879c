#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cprep {

/// Mixes a base seed with a stream tag so that derived generators are
/// decorrelated even for consecutive tags.  Uses the splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random stream.  Wraps std::mt19937_64 but performs all
/// bounded draws itself: the standard distribution classes are permitted to
/// differ between library implementations, and every draw here must
/// reproduce bit-for-bit across toolchains.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n).  Unbiased (rejection sampling).  n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % n;
  }

  int uniform_int(int n) { return static_cast<int>(uniform_index(static_cast<std::uint64_t>(n))); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform_real(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform_real: empty interval");
    return lo + (hi - lo) * uniform_unit();
  }

  bool bernoulli(double p) { return uniform_unit() < p; }

  /// In-place Fisher-Yates shuffle driven by uniform_index.
  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

  /// Derives an independent child stream (consumes one draw).
  RandomStream spawn() { return RandomStream(mix_seed(engine_(), 0x5eedULL)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cprep
