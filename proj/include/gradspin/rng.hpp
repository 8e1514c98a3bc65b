#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace gradspin {

/// Stream seed derivation. Two rounds of the splitmix64 output function:
///
///     hash64(seed, id) = fmix(fmix(seed ^ 0x9E3779B97F4A7C15) ^ (id * 0xBF58476D1CE4E5B9))
///     fmix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
///              z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
///
/// The result seeds a std::mt19937_64.
std::uint64_t hash64(std::uint64_t seed, std::uint64_t stream_id) noexcept;

/// A reproducible random stream identified by (seed, stream_id).
///
/// Single owner; movable between threads, never shared concurrently.
/// Satisfies UniformRandomBitGenerator so it can feed std algorithms, but
/// every derived variate used by the simulator goes through the member
/// functions below, whose algorithms are fixed here rather than left to the
/// standard library.
class RngStream {
public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject). n > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Exp(1) by inversion.
  double exponential();

  /// Standard normal (Box-Muller, one value per call).
  double normal();

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace gradspin
