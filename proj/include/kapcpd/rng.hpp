#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace kapcpd {

/// Counter-based 64-bit generator. Output k of stream (seed, stream) is a
/// SplitMix64 finalizer applied to key + k * golden-gamma, so any substream
/// can be constructed independently and in any order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    counter_ += kGamma;
    return mix(key_ + counter_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Substream for a nested index (e.g. snapshot t within a replica).
  CounterRng split(std::uint64_t index) const;

  static std::uint64_t mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates with CounterRng::below; identical on every platform.
void shuffle(std::span<std::size_t> values, CounterRng& rng);

std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng);

}  // namespace kapcpd
