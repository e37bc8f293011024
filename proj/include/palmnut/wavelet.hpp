#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "palmnut/vector.hpp"

namespace palmnut {

namespace detail {

// Four-tap Daubechies scaling filter (two vanishing moments).
inline const std::array<double, 4> &d4_lowpass() {
  static const std::array<double, 4> h = [] {
    const double s3 = std::sqrt(3.0);
    const double den = 4.0 * std::sqrt(2.0);
    return std::array<double, 4>{(1.0 + s3) / den, (3.0 + s3) / den,
                                 (3.0 - s3) / den, (1.0 - s3) / den};
  }();
  return h;
}

inline const std::array<double, 4> &d4_highpass() {
  static const std::array<double, 4> g = [] {
    const auto &h = d4_lowpass();
    return std::array<double, 4>{h[3], -h[2], h[1], -h[0]};
  }();
  return g;
}

// One analysis step over n strided samples with periodic wrap.
// Output: n/2 approximation coefficients followed by n/2 details.
inline void d4_analysis_step(double *x, std::size_t n, std::size_t stride,
                             std::vector<double> &scratch) {
  const auto &h = d4_lowpass();
  const auto &g = d4_highpass();
  scratch.assign(n, 0.0);
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double a = 0.0, d = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double v = x[((2 * i + k) % n) * stride];
      a += h[k] * v;
      d += g[k] * v;
    }
    scratch[i] = a;
    scratch[half + i] = d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i * stride] = scratch[i];
  }
}

inline void d4_synthesis_step(double *x, std::size_t n, std::size_t stride,
                              std::vector<double> &scratch) {
  const auto &h = d4_lowpass();
  const auto &g = d4_highpass();
  scratch.assign(n, 0.0);
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double a = x[i * stride];
    const double d = x[(half + i) * stride];
    for (std::size_t k = 0; k < 4; ++k) {
      scratch[(2 * i + k) % n] += h[k] * a + g[k] * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i * stride] = scratch[i];
  }
}

inline void check_dyadic(std::size_t n, int levels, const char *what) {
  if (levels < 1) {
    throw DimensionError(std::string(what) + ": levels must be >= 1");
  }
  const std::size_t block = std::size_t{1} << levels;
  if (n < block || n % block != 0) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(n) +
                         " not divisible by 2^" + std::to_string(levels));
  }
}

inline void dwt4_1d_inplace(std::span<double> x, int levels, bool forward) {
  std::vector<double> scratch;
  const std::size_t n = x.size();
  if (forward) {
    for (int l = 0; l < levels; ++l) {
      d4_analysis_step(x.data(), n >> l, 1, scratch);
    }
  } else {
    for (int l = levels - 1; l >= 0; --l) {
      d4_synthesis_step(x.data(), n >> l, 1, scratch);
    }
  }
}

// Row-major image, width columns by height rows. Each level transforms the
// rows of the current approximation block, then its columns.
inline void dwt4_2d_inplace(std::span<double> x, std::size_t width,
                            std::size_t height, int levels, bool forward) {
  std::vector<double> scratch;
  auto level_rows = [&](std::size_t w, std::size_t h, bool fwd) {
    for (std::size_t r = 0; r < h; ++r) {
      double *row = x.data() + r * width;
      fwd ? d4_analysis_step(row, w, 1, scratch)
          : d4_synthesis_step(row, w, 1, scratch);
    }
  };
  auto level_cols = [&](std::size_t w, std::size_t h, bool fwd) {
    for (std::size_t c = 0; c < w; ++c) {
      double *col = x.data() + c;
      fwd ? d4_analysis_step(col, h, width, scratch)
          : d4_synthesis_step(col, h, width, scratch);
    }
  };
  if (forward) {
    for (int l = 0; l < levels; ++l) {
      level_rows(width >> l, height >> l, true);
      level_cols(width >> l, height >> l, true);
    }
  } else {
    for (int l = levels - 1; l >= 0; --l) {
      level_cols(width >> l, height >> l, false);
      level_rows(width >> l, height >> l, false);
    }
  }
}

} // namespace detail

/// Orthonormal multi-level Daubechies-4 transform with periodic boundaries.
/// Coefficients are ordered coarse-to-fine: [a_L, d_L, d_{L-1}, ..., d_1].
inline ComplexVector dwt4_forward(const ComplexVector &x, int levels) {
  detail::check_dyadic(x.size(), levels, "dwt4_forward");
  ComplexVector out = x;
  detail::dwt4_1d_inplace(out.re(), levels, true);
  detail::dwt4_1d_inplace(out.im(), levels, true);
  return out;
}

inline ComplexVector dwt4_inverse(const ComplexVector &c, int levels) {
  detail::check_dyadic(c.size(), levels, "dwt4_inverse");
  ComplexVector out = c;
  detail::dwt4_1d_inplace(out.re(), levels, false);
  detail::dwt4_1d_inplace(out.im(), levels, false);
  return out;
}

/// 2D separable version (Mallat layout, approximation block top-left).
inline ComplexVector dwt4_forward_2d(const ComplexVector &x, std::size_t width,
                                     std::size_t height, int levels) {
  detail::require_same_size(x.size(), width * height, "dwt4_forward_2d");
  detail::check_dyadic(width, levels, "dwt4_forward_2d (width)");
  detail::check_dyadic(height, levels, "dwt4_forward_2d (height)");
  ComplexVector out = x;
  detail::dwt4_2d_inplace(out.re(), width, height, levels, true);
  detail::dwt4_2d_inplace(out.im(), width, height, levels, true);
  return out;
}

inline ComplexVector dwt4_inverse_2d(const ComplexVector &c, std::size_t width,
                                     std::size_t height, int levels) {
  detail::require_same_size(c.size(), width * height, "dwt4_inverse_2d");
  detail::check_dyadic(width, levels, "dwt4_inverse_2d (width)");
  detail::check_dyadic(height, levels, "dwt4_inverse_2d (height)");
  ComplexVector out = c;
  detail::dwt4_2d_inplace(out.re(), width, height, levels, false);
  detail::dwt4_2d_inplace(out.im(), width, height, levels, false);
  return out;
}

} // namespace palmnut
