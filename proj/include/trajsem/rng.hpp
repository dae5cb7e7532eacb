#pragma once

#include <cstdint>
#include <string_view>

#include "trajsem/util.hpp"

namespace trajsem {

/// SplitMix64: seedable, platform-stable 64-bit generator. Streams are
/// never shared; derive one per logical consumer with derive_stream_seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

namespace detail {

/// SplitMix64 finalizer as a stateless scrambler.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Stream-splitting scheme: fold each key into the running state with the
/// SplitMix64 finalizer. String keys enter as their FNV-1a 64 hash.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view string_key,
                                        std::int64_t id_key, int index_key) {
  std::uint64_t s = detail::mix64(seed ^ 0x5851F42D4C957F2DULL);
  s = detail::mix64(s ^ fnv1a64(string_key));
  s = detail::mix64(s ^ static_cast<std::uint64_t>(id_key));
  s = detail::mix64(s ^ static_cast<std::uint64_t>(index_key));
  return s;
}

}  // namespace trajsem
