#ifndef WORLDPRICE_RNG_HPP
#define WORLDPRICE_RNG_HPP

#include <cstdint>
#include <random>

namespace worldprice {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for (stream, index) under a master seed, by counter mixing.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

/**
 * Portable random source. The engine is std::mt19937_64, whose output
 * sequence is fixed by the standard; the conversions below are written out
 * by hand because the std distributions are implementation-defined.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace worldprice

#endif  // WORLDPRICE_RNG_HPP
