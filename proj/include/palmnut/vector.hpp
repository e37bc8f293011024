#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "palmnut/errors.hpp"

namespace palmnut {

using Complex = std::complex<double>;

/// Length-N real vector (magnitudes, phases, step-size bound vectors).
class RealVector {
public:
  RealVector() = default;
  explicit RealVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit RealVector(std::vector<double> values) : values_(std::move(values)) {
    check_finite();
  }
  RealVector(std::initializer_list<double> values) : values_(values) {
    check_finite();
  }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double &operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double> &raw() const noexcept { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const RealVector &, const RealVector &) = default;

private:
  void check_finite() const {
    if (!all_finite()) {
      throw NumericError("RealVector: non-finite entry");
    }
  }

  std::vector<double> values_;
};

/// Length-N complex vector stored as separate real and imaginary arrays.
class ComplexVector {
public:
  ComplexVector() = default;
  explicit ComplexVector(std::size_t n) : re_(n, 0.0), im_(n, 0.0) {}
  ComplexVector(std::vector<double> re, std::vector<double> im)
      : re_(std::move(re)), im_(std::move(im)) {
    detail::require_same_size(re_.size(), im_.size(), "ComplexVector");
    if (!all_finite()) {
      throw NumericError("ComplexVector: non-finite entry");
    }
  }
  ComplexVector(std::initializer_list<Complex> values) {
    re_.reserve(values.size());
    im_.reserve(values.size());
    for (const Complex &z : values) {
      re_.push_back(z.real());
      im_.push_back(z.imag());
    }
    if (!all_finite()) {
      throw NumericError("ComplexVector: non-finite entry");
    }
  }

  std::size_t size() const noexcept { return re_.size(); }
  bool empty() const noexcept { return re_.empty(); }

  Complex operator[](std::size_t n) const { return {re_[n], im_[n]}; }
  void set(std::size_t n, Complex z) {
    re_[n] = z.real();
    im_[n] = z.imag();
  }

  std::span<double> re() noexcept { return re_; }
  std::span<const double> re() const noexcept { return re_; }
  std::span<double> im() noexcept { return im_; }
  std::span<const double> im() const noexcept { return im_; }

  bool all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(re_.begin(), re_.end(), finite) &&
           std::all_of(im_.begin(), im_.end(), finite);
  }

  friend bool operator==(const ComplexVector &, const ComplexVector &) = default;

private:
  std::vector<double> re_;
  std::vector<double> im_;
};

// ---------------------------------------------------------------------------
// Real inner products and norms. Complex vectors are treated as vectors in
// R^{2N}, so inner(a, b) = Re{ sum conj(a_n) b_n }.

inline double inner(const RealVector &a, const RealVector &b) {
  detail::require_same_size(a.size(), b.size(), "inner");
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    s += a[n] * b[n];
  }
  return s;
}

inline double inner(const ComplexVector &a, const ComplexVector &b) {
  detail::require_same_size(a.size(), b.size(), "inner");
  double s = 0.0;
  const auto ar = a.re(), ai = a.im(), br = b.re(), bi = b.im();
  for (std::size_t n = 0; n < a.size(); ++n) {
    s += ar[n] * br[n] + ai[n] * bi[n];
  }
  return s;
}

/// Full complex inner product sum conj(a_n) b_n.
inline Complex inner_complex(const ComplexVector &a, const ComplexVector &b) {
  detail::require_same_size(a.size(), b.size(), "inner_complex");
  double sr = 0.0, si = 0.0;
  const auto ar = a.re(), ai = a.im(), br = b.re(), bi = b.im();
  for (std::size_t n = 0; n < a.size(); ++n) {
    sr += ar[n] * br[n] + ai[n] * bi[n];
    si += ar[n] * bi[n] - ai[n] * br[n];
  }
  return {sr, si};
}

inline double norm_sq(const RealVector &a) { return inner(a, a); }
inline double norm_sq(const ComplexVector &a) { return inner(a, a); }
inline double norm2(const RealVector &a) { return std::sqrt(norm_sq(a)); }
inline double norm2(const ComplexVector &a) { return std::sqrt(norm_sq(a)); }

inline double norm_inf(const RealVector &a) {
  double m = 0.0;
  for (double v : a.values()) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic.

inline RealVector operator+(const RealVector &a, const RealVector &b) {
  detail::require_same_size(a.size(), b.size(), "operator+");
  RealVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out[n] = a[n] + b[n];
  }
  return out;
}

inline RealVector operator-(const RealVector &a, const RealVector &b) {
  detail::require_same_size(a.size(), b.size(), "operator-");
  RealVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out[n] = a[n] - b[n];
  }
  return out;
}

inline RealVector operator*(double s, const RealVector &a) {
  RealVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out[n] = s * a[n];
  }
  return out;
}

inline ComplexVector operator+(const ComplexVector &a, const ComplexVector &b) {
  detail::require_same_size(a.size(), b.size(), "operator+");
  ComplexVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out.re()[n] = a.re()[n] + b.re()[n];
    out.im()[n] = a.im()[n] + b.im()[n];
  }
  return out;
}

inline ComplexVector operator-(const ComplexVector &a, const ComplexVector &b) {
  detail::require_same_size(a.size(), b.size(), "operator-");
  ComplexVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out.re()[n] = a.re()[n] - b.re()[n];
    out.im()[n] = a.im()[n] - b.im()[n];
  }
  return out;
}

inline ComplexVector operator*(double s, const ComplexVector &a) {
  ComplexVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out.re()[n] = s * a.re()[n];
    out.im()[n] = s * a.im()[n];
  }
  return out;
}

inline ComplexVector operator*(Complex s, const ComplexVector &a) {
  ComplexVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out.re()[n] = s.real() * a.re()[n] - s.imag() * a.im()[n];
    out.im()[n] = s.real() * a.im()[n] + s.imag() * a.re()[n];
  }
  return out;
}

/// m ⊙ q for real m.
inline ComplexVector hadamard(const RealVector &m, const ComplexVector &q) {
  detail::require_same_size(m.size(), q.size(), "hadamard");
  ComplexVector out(q.size());
  for (std::size_t n = 0; n < q.size(); ++n) {
    out.re()[n] = m[n] * q.re()[n];
    out.im()[n] = m[n] * q.im()[n];
  }
  return out;
}

/// Re{ conj(q) ⊙ z }.
inline RealVector real_conj_product(const ComplexVector &q,
                                    const ComplexVector &z) {
  detail::require_same_size(q.size(), z.size(), "real_conj_product");
  RealVector out(q.size());
  for (std::size_t n = 0; n < q.size(); ++n) {
    out[n] = q.re()[n] * z.re()[n] + q.im()[n] * z.im()[n];
  }
  return out;
}

inline ComplexVector to_complex(const RealVector &x) {
  ComplexVector out(x.size());
  std::copy(x.values().begin(), x.values().end(), out.re().begin());
  return out;
}

inline RealVector real_part(const ComplexVector &z) {
  return RealVector(std::vector<double>(z.re().begin(), z.re().end()));
}

inline RealVector abs(const ComplexVector &z) {
  RealVector out(z.size());
  for (std::size_t n = 0; n < z.size(); ++n) {
    out[n] = std::hypot(z.re()[n], z.im()[n]);
  }
  return out;
}

inline RealVector angle(const ComplexVector &z) {
  RealVector out(z.size());
  for (std::size_t n = 0; n < z.size(); ++n) {
    out[n] = std::atan2(z.im()[n], z.re()[n]);
  }
  return out;
}

/// e^{i p}, elementwise.
inline ComplexVector exp_i(const RealVector &p) {
  ComplexVector out(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) {
    out.re()[n] = std::cos(p[n]);
    out.im()[n] = std::sin(p[n]);
  }
  return out;
}

/// Largest deviation of |q_n| from 1.
inline double unit_modulus_violation(const ComplexVector &q) {
  double worst = 0.0;
  for (std::size_t n = 0; n < q.size(); ++n) {
    worst = std::max(worst, std::abs(std::hypot(q.re()[n], q.im()[n]) - 1.0));
  }
  return worst;
}

/// Concatenate equal-length blocks into one vector.
inline ComplexVector concat(const std::vector<ComplexVector> &blocks) {
  std::size_t total = 0;
  for (const auto &b : blocks) {
    total += b.size();
  }
  ComplexVector out(total);
  std::size_t offset = 0;
  for (const auto &b : blocks) {
    std::copy(b.re().begin(), b.re().end(), out.re().begin() + offset);
    std::copy(b.im().begin(), b.im().end(), out.im().begin() + offset);
    offset += b.size();
  }
  return out;
}

/// Extract block [offset, offset + n).
inline ComplexVector slice(const ComplexVector &z, std::size_t offset,
                           std::size_t n) {
  if (offset + n > z.size()) {
    throw DimensionError("slice: range exceeds vector length");
  }
  ComplexVector out(n);
  std::copy_n(z.re().begin() + offset, n, out.re().begin());
  std::copy_n(z.im().begin() + offset, n, out.im().begin());
  return out;
}

} // namespace palmnut
