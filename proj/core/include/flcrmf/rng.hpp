#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace flcrmf {

/// Counter-based 64-bit generator: output k is the SplitMix64 finalizer
/// applied to key + k·φ₆₄. Substreams are addressed by hashing a path of
/// integers (e.g. {cell, replicate}) into the key, so any replicate can be
/// regenerated without replaying the ones before it.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Independent stream for (seed, path...).
  static CounterRng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = mix(seed ^ 0x6a09e667f3bcc909ULL);
    for (const std::uint64_t part : path) key = mix(key ^ mix(part + 0xbb67ae8584caa73bULL));
    return CounterRng(key);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace flcrmf
