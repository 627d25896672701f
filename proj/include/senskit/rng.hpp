#pragma once

#include <cstdint>

namespace senskit {

namespace detail {

// SplitMix64 finalizer (Vigna / Steele et al.). Full 64-bit avalanche.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Counter-based uniform generator: draw i of stream s under seed k is
// splitmix64(state0(k, s) + i * golden_gamma). Every draw is addressable by
// (seed, stream, counter) alone, so generation order and thread count cannot
// change the output.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state0_(detail::splitmix64(seed ^ detail::splitmix64(0x5851f42d4c957f2dULL * stream + 0x14057b7ef767814fULL))) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return detail::splitmix64(state0_ + counter * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform deviate in [0, 1), 53 random mantissa bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform deviate strictly inside (0, 1); safe to feed quantile functions.
  double uniform_open(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n) by rejection-free multiply-shift (Lemire).
  // Bias is below 2^-64 and irrelevant for resampling indices.
  std::uint64_t below(std::uint64_t counter, std::uint64_t n) const {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(bits(counter)) * n) >> 64);
  }

 private:
  std::uint64_t state0_;
};

// Sequential adapter when counter bookkeeping is local anyway.
class SequentialRng {
 public:
  explicit SequentialRng(std::uint64_t seed, std::uint64_t stream = 0)
      : rng_(seed, stream) {}

  double uniform() { return rng_.uniform(next_++); }
  double uniform_open() { return rng_.uniform_open(next_++); }
  std::uint64_t below(std::uint64_t n) { return rng_.below(next_++, n); }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace senskit
