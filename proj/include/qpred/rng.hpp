#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qpred {

/// Default seed for every CLI entry point and helper that takes one.
inline constexpr std::uint64_t kDefaultSeed = 12345;

// splitmix64; used only to expand 64-bit seeds into generator state.
struct SplitMix64 {
  std::uint64_t state;

  constexpr explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

/// xoshiro256++ (Blackman/Vigna). All sampling in this library goes through
/// this generator plus the explicit transforms below, so a given seed gives
/// the same stream on every platform with IEEE doubles.
///
/// Seeding: the (seed, stream) pair is hashed through splitmix64 and expanded
/// into the four state words. Distinct stream ids give independent streams
/// for the same user-facing seed.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed, std::uint64_t stream = 0) {
    SplitMix64 sm(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    for (auto& w : state_) w = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in the open interval (0, 1); safe as a log/Box-Muller argument.
  double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, n) via Lemire's multiply-shift rejection.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("bounded: n must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  /// Box-Muller without the cached second variate; draws two uniforms per
  /// value so the stream position does not depend on caller history.
  double normal(double mean, double sd) {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double z =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    return mean + sd * z;
  }

  /// Normal truncated to (0, inf) by resampling.
  double positive_normal(double mean, double sd) {
    for (int attempt = 0; attempt < 4096; ++attempt) {
      const double x = normal(mean, sd);
      if (x > 0.0) return x;
    }
    // Unreachable for the mean > 0 configs this library accepts.
    throw std::runtime_error("positive_normal: acceptance failed");
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace qpred
