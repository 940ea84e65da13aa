#pragma once

#include <cstdint>

namespace tbqkd::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based uniform stream: the draw for (pulse, slot) depends only on
/// the key and the counter, so any partition of the pulse range reproduces
/// the same numbers.
class CounterStream {
 public:
  static constexpr std::uint64_t kSlots = 16;

  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(mix64(seed ^ mix64(stream_id + kGolden))) {}

  constexpr std::uint64_t bits(std::uint64_t pulse, std::uint64_t slot) const {
    return mix64(key_ + (pulse * kSlots + slot + 1) * kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t pulse, std::uint64_t slot) const {
    return static_cast<double>(bits(pulse, slot) >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace tbqkd::rng
