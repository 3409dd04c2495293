#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace gated {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011). Output
// depends only on (key, counter), so per-pixel streams are reproducible
// regardless of processing order or thread count.

namespace detail {

inline constexpr uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hi_lo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
  uint64_t product = static_cast<uint64_t>(a) * b;
  lo = static_cast<uint32_t>(product);
  hi = static_cast<uint32_t>(product >> 32);
}

inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                          std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    uint32_t lo0, hi0, lo1, hi1;
    mul_hi_lo(kPhiloxM4x32A, ctr[0], lo0, hi0);
    mul_hi_lo(kPhiloxM4x32B, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
  }
  return ctr;
}

}  // namespace detail

/// Poisson means at or above this use the Gaussian approximation; below it,
/// exact CDF inversion (in chunks, so exp(-mean) stays representable).
inline constexpr double kPoissonGaussianThreshold = 1000.0;
inline constexpr double kPoissonInversionChunk = 500.0;

/// One independent random stream, addressed by (seed, stream, row, col).
/// Successive draws advance an internal 32-bit draw counter; everything else
/// in the Philox counter block is fixed by the address.
class PixelStream {
 public:
  PixelStream(uint64_t seed, uint32_t stream, uint32_t row, uint32_t col)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        base_{0, col, row, stream} {}

  uint32_t next_u32() {
    if (have_ == 0) {
      auto ctr = base_;
      ctr[0] = draw_index_++;
      block_ = detail::philox4x32(ctr, key_);
      have_ = 4;
    }
    return block_[--have_];
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925286766559 * u2;
    cached_normal_ = radius * std::sin(angle);
    have_cached_normal_ = true;
    return radius * std::cos(angle);
  }

  /// Poisson draw. Exact CDF inversion below kPoissonGaussianThreshold
  /// (additivity over chunks of mean <= 500 keeps exp() in range), rounded
  /// Gaussian approximation above it.
  int64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean >= kPoissonGaussianThreshold) {
      double value = mean + std::sqrt(mean) * normal();
      return value > 0.0 ? static_cast<int64_t>(std::llround(value)) : 0;
    }
    int64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
      double chunk = remaining > kPoissonInversionChunk ? kPoissonInversionChunk : remaining;
      remaining -= chunk;
      total += poisson_inversion(chunk);
    }
    return total;
  }

 private:
  int64_t poisson_inversion(double mean) {
    double u = uniform();
    double pmf = std::exp(-mean);
    double cdf = pmf;
    int64_t k = 0;
    // mean <= 500, so the walk ends after O(mean) steps; the hard cap only
    // guards against u landing in the far tail's rounding plateau.
    while (u > cdf && k < 100000) {
      ++k;
      pmf *= mean / static_cast<double>(k);
      cdf += pmf;
    }
    return k;
  }

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> base_;
  std::array<uint32_t, 4> block_{};
  uint32_t draw_index_ = 0;
  int have_ = 0;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Stream ids keep unrelated consumers of the same seed decorrelated.
inline constexpr uint32_t kStreamNoiseSlice0 = 0;   // slices 0..2 and ambient=3
inline constexpr uint32_t kStreamSceneAlbedo = 16;
inline constexpr uint32_t kStreamSceneLayout = 17;
inline constexpr uint32_t kStreamLidarDropout = 18;

}  // namespace gated
