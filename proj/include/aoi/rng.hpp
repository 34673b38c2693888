#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <random>

namespace aoi {

// SplitMix64 used as a counter-based generator: the output is a bijective
// mix of (key + counter * golden gamma). Any (seed, stream, slot) triple maps
// to an independent substream, so slots can be evaluated in any order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

// Named substreams; values are part of the reproducibility contract.
enum class Stream : std::uint64_t {
  activity = 1,
  channel = 2,
  noise = 3,
  contention = 4,
  fixed_rho = 5,
  init = 6,
  pilots = 7,
};

inline CounterRng substream(std::uint64_t seed, Stream stream, std::uint64_t slot) noexcept {
  std::uint64_t key = CounterRng::mix(seed ^ 0x6a09e667f3bcc909ULL);
  key = CounterRng::mix(key ^ static_cast<std::uint64_t>(stream));
  key = CounterRng::mix(key ^ (slot * 0xd1b54a32d192ed03ULL));
  return CounterRng(key);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(CounterRng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Circularly-symmetric complex Gaussian CN(0, variance).
template <typename Real = double>
std::complex<Real> complex_normal(CounterRng& rng, Real variance) {
  std::normal_distribution<Real> normal(Real(0), std::sqrt(variance / Real(2)));
  const Real re = normal(rng);
  const Real im = normal(rng);
  return {re, im};
}

}  // namespace aoi
