#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace advc {

/// SplitMix64: small, seedable, splittable. Substreams are derived by hashing
/// (seed, stream id), so the draws for buyer #k never depend on how buyers are
/// partitioned across workers.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix(z);
  }

  /// Independent generator for substream `id`.
  SplitMix64 split(std::uint64_t id) const {
    return SplitMix64(mix(state_ ^ mix(id + 0x632be59bd9b4e019ULL)));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Laplace(0, scale) by inverse CDF.
  double laplace(double scale) {
    // u in (-1/2, 1/2); the open lower end keeps log() finite.
    double u;
    do {
      u = uniform() - 0.5;
    } while (u == -0.5);
    double mag = -scale * std::log1p(-2.0 * std::abs(u));
    return u < 0.0 ? -mag : mag;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace advc
