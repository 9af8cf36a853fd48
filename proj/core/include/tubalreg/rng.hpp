#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace tubalreg {

/// Counter-based 64-bit generator: the i-th output is a SplitMix64-style
/// finalizer applied to (key, i). Substreams are derived by hashing a parent
/// key with a tag, so every (replication, purpose) pair gets an independent,
/// reproducible stream regardless of evaluation order.
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }

  /// Output number `i` of this stream, without advancing.
  result_type at(std::uint64_t i) const noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Child stream for (tag, index).
  CounterRng substream(std::string_view tag, std::uint64_t index = 0) const noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::uint64_t index = 0) noexcept;

}  // namespace tubalreg
