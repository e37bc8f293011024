#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "palmnut/errors.hpp"
#include "palmnut/random.hpp"
#include "palmnut/vector.hpp"

namespace palmnut {

inline constexpr double kTissueThreshold = 0.05;

enum class PhantomKind { ellipses, flat };

struct Phantom {
  std::size_t width = 0;
  std::size_t height = 0;
  RealVector magnitude;
  RealVector phase;
  std::vector<bool> background_mask; // true = tissue

  ComplexVector image() const { return hadamard(magnitude, exp_i(phase)); }
};

struct AcquisitionSpec {
  std::size_t coil_count = 1;
  std::vector<bool> sampling_mask;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
};

namespace detail {

inline void check_image_dims(std::size_t w, std::size_t h, const char *what) {
  auto pow2 = [](std::size_t n) { return n != 0 && (n & (n - 1)) == 0; };
  if (w < 8 || h < 8 || !pow2(w) || !pow2(h)) {
    throw DimensionError(std::string(what) + ": dims must be powers of two >= 8, got " +
                         std::to_string(w) + "x" + std::to_string(h));
  }
}

// Normalized coordinates in [-1, 1), x along width, y along height (up).
inline double norm_x(std::size_t c, std::size_t w) {
  return (2.0 * static_cast<double>(c) + 1.0) / static_cast<double>(w) - 1.0;
}
inline double norm_y(std::size_t r, std::size_t h) {
  return 1.0 - (2.0 * static_cast<double>(r) + 1.0) / static_cast<double>(h);
}

struct Ellipse {
  double x0, y0, a, b, theta_deg, value;
};

// Additive intensities, head-like layout.
inline const std::array<Ellipse, 7> &phantom_ellipses() {
  static const std::array<Ellipse, 7> e{{
      {0.0, 0.0, 0.70, 0.90, 0.0, 0.9},
      {0.0, -0.02, 0.62, 0.82, 0.0, -0.45},
      {0.22, 0.0, 0.11, 0.31, -18.0, 0.3},
      {-0.22, 0.0, 0.16, 0.41, 18.0, 0.3},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.2},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.35},
      {0.0, -0.6, 0.05, 0.025, 0.0, 0.4},
  }};
  return e;
}

inline std::vector<bool> tissue_mask(const RealVector &mag) {
  const double thr = kTissueThreshold * norm_inf(mag);
  std::vector<bool> mask(mag.size());
  for (std::size_t n = 0; n < mag.size(); ++n) {
    mask[n] = mag[n] > thr;
  }
  return mask;
}

struct PhaseCoefficients {
  double cx, cy, cxy, bump_amp, bump_x, bump_y, bump_sigma;
};

inline RealVector eval_phase(std::size_t w, std::size_t h, const PhaseCoefficients &pc) {
  RealVector p(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    const double y = norm_y(r, h);
    for (std::size_t c = 0; c < w; ++c) {
      const double x = norm_x(c, w);
      const double dx = x - pc.bump_x, dy = y - pc.bump_y;
      const double bump =
          pc.bump_amp * std::exp(-(dx * dx + dy * dy) / (2.0 * pc.bump_sigma * pc.bump_sigma));
      p[r * w + c] = pc.cx * x + pc.cy * y + pc.cxy * x * y + bump;
    }
  }
  return p;
}

} // namespace detail

/// Low-order polynomial phase plus one Gaussian bump. Seed 0 gives the
/// reference phase; other seeds draw perturbed coefficients. |phase| < pi.
inline RealVector make_smooth_phase(std::size_t width, std::size_t height,
                                    std::uint64_t seed = 0) {
  detail::check_image_dims(width, height, "make_smooth_phase");
  detail::PhaseCoefficients pc{0.8, -0.5, 0.6, 0.9, 0.25, 0.2, 0.3};
  if (seed != 0) {
    SplitMix64 rng(seed);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    pc = {draw(-0.8, 0.8), draw(-0.8, 0.8), draw(-0.5, 0.5), draw(-0.9, 0.9),
          draw(-0.4, 0.4), draw(-0.4, 0.4), draw(0.2, 0.4)};
  }
  return detail::eval_phase(width, height, pc);
}

inline Phantom make_phantom(std::size_t width, std::size_t height,
                            PhantomKind kind = PhantomKind::ellipses) {
  detail::check_image_dims(width, height, "make_phantom");
  Phantom ph;
  ph.width = width;
  ph.height = height;
  ph.magnitude = RealVector(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    const double y = detail::norm_y(r, height);
    for (std::size_t c = 0; c < width; ++c) {
      const double x = detail::norm_x(c, width);
      double v = 0.0;
      if (kind == PhantomKind::flat) {
        v = x * x + y * y <= 0.8 * 0.8 ? 1.0 : 0.0;
      } else {
        for (const auto &e : detail::phantom_ellipses()) {
          const double th = e.theta_deg * std::numbers::pi / 180.0;
          const double dx = x - e.x0, dy = y - e.y0;
          const double xr = dx * std::cos(th) + dy * std::sin(th);
          const double yr = -dx * std::sin(th) + dy * std::cos(th);
          if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) {
            v += e.value;
          }
        }
        v = std::clamp(v, 0.0, 1.0);
      }
      ph.magnitude[r * width + c] = v;
    }
  }
  ph.phase = make_smooth_phase(width, height);
  ph.background_mask = detail::tissue_mask(ph.magnitude);
  return ph;
}

/// Smooth Gaussian-profile coil maps with linear phase ramps, scaled so the
/// largest sum-of-squares magnitude is 1.
inline std::vector<ComplexVector> make_sensitivities(std::size_t width, std::size_t height,
                                                     std::size_t coil_count,
                                                     std::uint64_t seed) {
  if (coil_count < 1) {
    throw ConfigError("make_sensitivities: coil_count must be >= 1");
  }
  const std::size_t n = width * height;
  if (coil_count == 1) {
    ComplexVector one(n);
    for (std::size_t i = 0; i < n; ++i) {
      one.set(i, {1.0, 0.0});
    }
    return {one};
  }
  constexpr double radius = 1.2, sigma = 0.9;
  SplitMix64 rng(seed);
  std::vector<ComplexVector> maps;
  for (std::size_t j = 0; j < coil_count; ++j) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(j) /
                       static_cast<double>(coil_count);
    const double cx = radius * std::cos(ang), cy = radius * std::sin(ang);
    const double kx = 1.5 * (2.0 * rng.uniform() - 1.0);
    const double ky = 1.5 * (2.0 * rng.uniform() - 1.0);
    const double p0 = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
    ComplexVector s(n);
    for (std::size_t r = 0; r < height; ++r) {
      const double y = detail::norm_y(r, height);
      for (std::size_t c = 0; c < width; ++c) {
        const double x = detail::norm_x(c, width);
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double amp = std::exp(-d2 / (2.0 * sigma * sigma));
        s.set(r * width + c, std::polar(amp, p0 + kx * x + ky * y));
      }
    }
    maps.push_back(std::move(s));
  }
  const RealVector sos = [&] {
    RealVector out(n);
    for (const auto &s : maps) {
      for (std::size_t i = 0; i < n; ++i) {
        out[i] += std::norm(s[i]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::sqrt(out[i]);
    }
    return out;
  }();
  const double scale = 1.0 / norm_inf(sos);
  for (auto &s : maps) {
    s = scale * s;
  }
  return maps;
}

/// Root sum of squares of coil maps per pixel.
inline RealVector sum_of_squares(const std::vector<ComplexVector> &maps) {
  RealVector out(maps.at(0).size());
  for (const auto &s : maps) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out[i] += std::norm(s[i]);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(out[i]);
  }
  return out;
}

namespace detail {

// Wrapped frequency index in unshifted FFT order, as a fraction of n/2.
inline double centered_freq(std::size_t k, std::size_t n) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  const double f = kk < nn / 2.0 ? kk : kk - nn;
  return f / (nn / 2.0);
}

inline bool in_center_block(std::size_t k, std::size_t n, std::size_t side) {
  const auto kk = static_cast<long long>(k);
  const auto nn = static_cast<long long>(n);
  const long long f = kk < nn / 2 ? kk : kk - nn;
  const long long lo = -static_cast<long long>(side / 2);
  const long long hi = lo + static_cast<long long>(side);
  return f >= lo && f < hi;
}

} // namespace detail

/// Variable-density random k-space mask in unshifted FFT order (DC at index
/// 0). A centered block of side round(center_frac * dim) is fully sampled;
/// the remaining budget round(N / accel) is filled by rejection sampling with
/// acceptance probability (1 - r)^2 + 0.02, r = normalized radius.
inline std::vector<bool> make_mask(std::size_t width, std::size_t height, double accel,
                                   double center_frac, std::uint64_t seed) {
  if (!(accel >= 1.0)) {
    throw ConfigError("make_mask: accel must be >= 1");
  }
  if (!(center_frac >= 0.0 && center_frac <= 1.0)) {
    throw ConfigError("make_mask: center_frac must lie in [0, 1]");
  }
  const std::size_t n = width * height;
  if (n == 0) {
    throw DimensionError("make_mask: empty image");
  }
  std::vector<bool> mask(n, false);
  if (accel == 1.0) {
    mask.assign(n, true);
    return mask;
  }
  const auto side_w = static_cast<std::size_t>(std::lround(center_frac * static_cast<double>(width)));
  const auto side_h = static_cast<std::size_t>(std::lround(center_frac * static_cast<double>(height)));
  std::size_t count = 0;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (detail::in_center_block(c, width, side_w) && detail::in_center_block(r, height, side_h)) {
        mask[r * width + c] = true;
        ++count;
      }
    }
  }
  const auto budget = static_cast<std::size_t>(std::lround(static_cast<double>(n) / accel));
  if (count > budget) {
    throw ConfigError("make_mask: center block (" + std::to_string(count) +
                      " samples) exceeds budget " + std::to_string(budget));
  }
  SplitMix64 rng(seed);
  while (count < budget) {
    const auto idx = static_cast<std::size_t>(rng.next() % n);
    if (mask[idx]) {
      continue;
    }
    const double fx = detail::centered_freq(idx % width, width);
    const double fy = detail::centered_freq(idx / width, height);
    const double r = std::min(1.0, std::sqrt(0.5 * (fx * fx + fy * fy)));
    const double prob = (1.0 - r) * (1.0 - r) + 0.02;
    if (rng.uniform() < prob) {
      mask[idx] = true;
      ++count;
    }
  }
  return mask;
}

/// x + sigma (g_re + i g_im) with standard normal draws, re then im per element.
inline ComplexVector add_noise(const ComplexVector &x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) {
    throw ConfigError("add_noise: sigma must be >= 0");
  }
  if (sigma == 0.0) {
    return x;
  }
  SplitMix64 rng(seed);
  ComplexVector out = x;
  for (std::size_t n = 0; n < x.size(); ++n) {
    out.re()[n] += sigma * rng.normal();
    out.im()[n] += sigma * rng.normal();
  }
  return out;
}

enum class NrmseKind { complex, magnitude };

/// Masked ||estimate - truth|| / ||truth||.
inline double nrmse(const ComplexVector &estimate, const ComplexVector &truth,
                    const std::vector<bool> &mask, NrmseKind kind = NrmseKind::complex) {
  detail::require_same_size(estimate.size(), truth.size(), "nrmse");
  detail::require_same_size(mask.size(), truth.size(), "nrmse mask");
  double err = 0.0, ref = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (!mask[n]) {
      continue;
    }
    if (kind == NrmseKind::complex) {
      err += std::norm(estimate[n] - truth[n]);
      ref += std::norm(truth[n]);
    } else {
      const double d = std::abs(estimate[n]) - std::abs(truth[n]);
      err += d * d;
      ref += std::norm(truth[n]);
    }
  }
  if (!(ref > 0.0)) {
    throw NumericError("nrmse: truth has zero norm on the mask");
  }
  return std::sqrt(err / ref);
}

inline double nrmse(const RealVector &estimate, const RealVector &truth,
                    const std::vector<bool> &mask) {
  return nrmse(to_complex(estimate), to_complex(truth), mask);
}

inline std::size_t mask_count(const std::vector<bool> &mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

/// Noise level giving an expected masked input NRMSE of target.
inline double sigma_for_nrmse(const ComplexVector &truth, const std::vector<bool> &mask,
                              double target) {
  double ref = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (mask[n]) {
      ref += std::norm(truth[n]);
    }
  }
  return target * std::sqrt(ref / (2.0 * static_cast<double>(mask_count(mask))));
}

} // namespace palmnut
