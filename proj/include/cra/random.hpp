#pragma once

#include <cstdint>

namespace cra {

// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

/**
 * Counter-keyed random stream. Each (seed, index) pair names an independent
 * splitmix64 sequence, so trial i sees the same numbers no matter which
 * worker runs it or in what order trials are visited.
 */
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::uint64_t index)
      : state_(mix64(seed ^ mix64(index + UINT64_C(0x632BE59BD9B4E019)))) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += UINT64_C(0x9E3779B97F4A7C15));
    return mix64(z);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bit() { return (next() >> 63) != 0; }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift; the bias is < n / 2^64.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace cra
