#include "gradspin/rng.hpp"

#include <cmath>
#include <numbers>

namespace gradspin {

namespace {

constexpr std::uint64_t fmix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t hash64(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return fmix(fmix(seed ^ 0x9E3779B97F4A7C15ULL) ^ (stream_id * 0xBF58476D1CE4E5B9ULL));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(hash64(seed, stream_id)) {}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  __extension__ using u128 = unsigned __int128;
  u128 m = static_cast<u128>(engine_()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<u128>(engine_()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::exponential() { return -std::log(uniform_open()); }

double RngStream::normal() {
  const double r = std::sqrt(-2.0 * std::log(uniform_open()));
  return r * std::cos(2.0 * std::numbers::pi * uniform());
}

}  // namespace gradspin
