#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "palmnut/vector.hpp"

namespace palmnut {

/// SplitMix64 generator. The full algorithm is three lines, so every
/// generated phantom, mask and noise draw is reproducible in any language.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1], safe as a logarithm argument.
  double uniform_open_zero() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. Draws come in pairs; the second value of
  /// each pair is cached and returned by the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline RealVector random_real(std::size_t n, SplitMix64 &rng) {
  RealVector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = rng.normal();
  }
  return out;
}

inline ComplexVector random_complex(std::size_t n, SplitMix64 &rng) {
  ComplexVector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.re()[i] = rng.normal();
    out.im()[i] = rng.normal();
  }
  return out;
}

/// Random unit-modulus vector with phases uniform on [-pi, pi).
inline ComplexVector random_unit_modulus(std::size_t n, SplitMix64 &rng) {
  ComplexVector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
    out.re()[i] = std::cos(p);
    out.im()[i] = std::sin(p);
  }
  return out;
}

} // namespace palmnut
