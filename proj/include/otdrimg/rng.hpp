#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace otdrimg {

/// splitmix64. Chosen because the whole generator is a few lines and produces
/// the same stream on every platform, unlike the std distributions.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11U) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; one variate per call, the sibling is discarded.
  double gaussian() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Mixes several integers into one seed so derived streams do not overlap.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                                               std::uint64_t b = 0, std::uint64_t c = 0) noexcept {
  SplitMix64 g(seed ^ 0xD1B54A32D192ED03ULL);
  std::uint64_t h = g.next();
  for (std::uint64_t v : {a, b, c}) {
    SplitMix64 step(h ^ (v * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
    h = step.next();
  }
  return h;
}

}  // namespace otdrimg
