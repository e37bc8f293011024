#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "palmnut/errors.hpp"
#include "palmnut/random.hpp"
#include "palmnut/vector.hpp"
#include "palmnut/wavelet.hpp"

namespace palmnut {

enum class OperatorKind {
  identity,
  diagonal,
  masked_dft,
  sense,
  finite_difference_stack,
  daubechies4,
  composite,
  stacked,
};

/// Linear map between complex vector spaces with an explicit adjoint.
/// Implementations are immutable after construction.
class LinearOperator {
public:
  LinearOperator(std::size_t domain_dim, std::size_t codomain_dim)
      : domain_dim_(domain_dim), codomain_dim_(codomain_dim) {
    if (domain_dim == 0 || codomain_dim == 0) {
      throw DimensionError("LinearOperator: dimensions must be positive");
    }
  }
  virtual ~LinearOperator() = default;

  std::size_t domain_dim() const noexcept { return domain_dim_; }
  std::size_t codomain_dim() const noexcept { return codomain_dim_; }
  virtual OperatorKind kind() const noexcept = 0;

  /// True when the operator is known to satisfy T^H T = T T^H = I.
  virtual bool is_unitary() const noexcept { return false; }

  ComplexVector apply(const ComplexVector &x) const {
    detail::require_same_size(x.size(), domain_dim_, "LinearOperator::apply");
    return do_apply(x);
  }

  ComplexVector adjoint_apply(const ComplexVector &y) const {
    detail::require_same_size(y.size(), codomain_dim_,
                              "LinearOperator::adjoint_apply");
    return do_adjoint(y);
  }

protected:
  virtual ComplexVector do_apply(const ComplexVector &x) const = 0;
  virtual ComplexVector do_adjoint(const ComplexVector &y) const = 0;

private:
  std::size_t domain_dim_;
  std::size_t codomain_dim_;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

inline ComplexVector apply(const LinearOperator &op, const ComplexVector &x) {
  return op.apply(x);
}

inline ComplexVector adjoint_apply(const LinearOperator &op,
                                   const ComplexVector &y) {
  return op.adjoint_apply(y);
}

// ---------------------------------------------------------------------------

class IdentityOperator final : public LinearOperator {
public:
  explicit IdentityOperator(std::size_t n) : LinearOperator(n, n) {}
  OperatorKind kind() const noexcept override { return OperatorKind::identity; }
  bool is_unitary() const noexcept override { return true; }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override { return x; }
  ComplexVector do_adjoint(const ComplexVector &y) const override { return y; }
};

class DiagonalOperator final : public LinearOperator {
public:
  explicit DiagonalOperator(ComplexVector diag)
      : LinearOperator(diag.size(), diag.size()), diag_(std::move(diag)) {}

  OperatorKind kind() const noexcept override { return OperatorKind::diagonal; }
  const ComplexVector &diagonal() const noexcept { return diag_; }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override {
    return multiply(x, false);
  }
  ComplexVector do_adjoint(const ComplexVector &y) const override {
    return multiply(y, true);
  }

private:
  ComplexVector multiply(const ComplexVector &x, bool conjugate) const {
    ComplexVector out(x.size());
    const double sign = conjugate ? -1.0 : 1.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double dr = diag_.re()[n], di = sign * diag_.im()[n];
      out.re()[n] = dr * x.re()[n] - di * x.im()[n];
      out.im()[n] = dr * x.im()[n] + di * x.re()[n];
    }
    return out;
  }

  ComplexVector diag_;
};

// ---------------------------------------------------------------------------
// Unitary 2D DFT (scaled by 1/sqrt(N)), FFTW-backed.

namespace detail {

inline std::mutex &fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwBuffer {
public:
  explicit FftwBuffer(std::size_t n)
      : data_(static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data_ == nullptr) {
      throw std::bad_alloc();
    }
  }
  ~FftwBuffer() { fftw_free(data_); }
  FftwBuffer(const FftwBuffer &) = delete;
  FftwBuffer &operator=(const FftwBuffer &) = delete;

  fftw_complex *get() const noexcept { return data_; }

private:
  fftw_complex *data_;
};

} // namespace detail

/// Orthonormal 2D DFT over a row-major width x height grid (DC at index 0).
class UnitaryDft2D {
public:
  UnitaryDft2D(std::size_t width, std::size_t height)
      : width_(width), height_(height), n_(width * height),
        scale_(1.0 / std::sqrt(static_cast<double>(width * height))) {
    if (n_ == 0) {
      throw DimensionError("UnitaryDft2D: empty grid");
    }
    detail::FftwBuffer in(n_), out(n_);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width),
                                in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width),
                                 in.get(), out.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    if (forward_ == nullptr || backward_ == nullptr) {
      throw NumericError("UnitaryDft2D: FFTW planning failed");
    }
  }

  ~UnitaryDft2D() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  UnitaryDft2D(const UnitaryDft2D &) = delete;
  UnitaryDft2D &operator=(const UnitaryDft2D &) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

  ComplexVector forward(const ComplexVector &x) const { return run(x, forward_); }
  ComplexVector backward(const ComplexVector &x) const { return run(x, backward_); }

private:
  ComplexVector run(const ComplexVector &x, fftw_plan plan) const {
    detail::require_same_size(x.size(), n_, "UnitaryDft2D");
    detail::FftwBuffer in(n_), out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      in.get()[i][0] = x.re()[i];
      in.get()[i][1] = x.im()[i];
    }
    fftw_execute_dft(plan, in.get(), out.get());
    ComplexVector y(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      y.re()[i] = scale_ * out.get()[i][0];
      y.im()[i] = scale_ * out.get()[i][1];
    }
    return y;
  }

  std::size_t width_, height_, n_;
  double scale_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

namespace detail {

inline std::vector<std::size_t> sampled_indices(const std::vector<bool> &mask) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      idx.push_back(i);
    }
  }
  if (idx.empty()) {
    throw DimensionError("sampling mask selects no samples");
  }
  return idx;
}

} // namespace detail

/// y = P F x: unitary 2D DFT followed by selection of the sampled k-space
/// locations. The codomain holds only the sampled values, in index order.
class MaskedDftOperator final : public LinearOperator {
public:
  MaskedDftOperator(std::size_t width, std::size_t height,
                    const std::vector<bool> &mask)
      : MaskedDftOperator(width, height, detail::sampled_indices(checked(mask, width * height))) {}

  OperatorKind kind() const noexcept override { return OperatorKind::masked_dft; }
  const std::vector<std::size_t> &sampled() const noexcept { return sampled_; }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override {
    const ComplexVector k = dft_->forward(x);
    ComplexVector y(sampled_.size());
    for (std::size_t j = 0; j < sampled_.size(); ++j) {
      y.re()[j] = k.re()[sampled_[j]];
      y.im()[j] = k.im()[sampled_[j]];
    }
    return y;
  }

  ComplexVector do_adjoint(const ComplexVector &y) const override {
    ComplexVector k(dft_->size());
    for (std::size_t j = 0; j < sampled_.size(); ++j) {
      k.re()[sampled_[j]] = y.re()[j];
      k.im()[sampled_[j]] = y.im()[j];
    }
    return dft_->backward(k);
  }

private:
  MaskedDftOperator(std::size_t width, std::size_t height,
                    std::vector<std::size_t> sampled)
      : LinearOperator(width * height, sampled.size()),
        dft_(std::make_shared<UnitaryDft2D>(width, height)),
        sampled_(std::move(sampled)) {}

  static const std::vector<bool> &checked(const std::vector<bool> &mask,
                                          std::size_t n) {
    detail::require_same_size(mask.size(), n, "MaskedDftOperator mask");
    return mask;
  }

  std::shared_ptr<const UnitaryDft2D> dft_;
  std::vector<std::size_t> sampled_;
};

/// SENSE forward model: for each coil c, y_c = P F (s_c ⊙ x). Coil blocks are
/// concatenated in the codomain.
class SenseOperator final : public LinearOperator {
public:
  SenseOperator(std::size_t width, std::size_t height,
                std::vector<ComplexVector> sensitivities,
                const std::vector<bool> &mask)
      : SenseOperator(width, height, std::move(sensitivities),
                      detail::sampled_indices(mask), mask.size()) {}

  OperatorKind kind() const noexcept override { return OperatorKind::sense; }
  std::size_t coil_count() const noexcept { return sens_.size(); }
  std::size_t samples_per_coil() const noexcept { return sampled_.size(); }
  const std::vector<ComplexVector> &sensitivities() const noexcept { return sens_; }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override {
    const std::size_t m = sampled_.size();
    ComplexVector y(m * sens_.size());
    for (std::size_t c = 0; c < sens_.size(); ++c) {
      const ComplexVector k = dft_->forward(multiply(sens_[c], x, false));
      for (std::size_t j = 0; j < m; ++j) {
        y.re()[c * m + j] = k.re()[sampled_[j]];
        y.im()[c * m + j] = k.im()[sampled_[j]];
      }
    }
    return y;
  }

  ComplexVector do_adjoint(const ComplexVector &y) const override {
    const std::size_t m = sampled_.size();
    ComplexVector x(dft_->size());
    for (std::size_t c = 0; c < sens_.size(); ++c) {
      ComplexVector k(dft_->size());
      for (std::size_t j = 0; j < m; ++j) {
        k.re()[sampled_[j]] = y.re()[c * m + j];
        k.im()[sampled_[j]] = y.im()[c * m + j];
      }
      const ComplexVector img = multiply(sens_[c], dft_->backward(k), true);
      for (std::size_t n = 0; n < x.size(); ++n) {
        x.re()[n] += img.re()[n];
        x.im()[n] += img.im()[n];
      }
    }
    return x;
  }

private:
  SenseOperator(std::size_t width, std::size_t height,
                std::vector<ComplexVector> sensitivities,
                std::vector<std::size_t> sampled, std::size_t mask_size)
      : LinearOperator(width * height, sampled.size() * std::max<std::size_t>(sensitivities.size(), 1)),
        dft_(std::make_shared<UnitaryDft2D>(width, height)),
        sens_(std::move(sensitivities)), sampled_(std::move(sampled)) {
    detail::require_same_size(mask_size, width * height, "SenseOperator mask");
    if (sens_.empty()) {
      throw DimensionError("SenseOperator: at least one coil required");
    }
    for (const auto &s : sens_) {
      detail::require_same_size(s.size(), width * height, "SenseOperator sensitivity");
    }
  }

  static ComplexVector multiply(const ComplexVector &s, const ComplexVector &x,
                                bool conjugate) {
    ComplexVector out(x.size());
    const double sign = conjugate ? -1.0 : 1.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double sr = s.re()[n], si = sign * s.im()[n];
      out.re()[n] = sr * x.re()[n] - si * x.im()[n];
      out.im()[n] = sr * x.im()[n] + si * x.re()[n];
    }
    return out;
  }

  std::shared_ptr<const UnitaryDft2D> dft_;
  std::vector<ComplexVector> sens_;
  std::vector<std::size_t> sampled_;
};

// ---------------------------------------------------------------------------

enum class DifferenceAxes { horizontal, vertical, both };

/// Periodic forward differences on a row-major width x height grid.
/// With `both`, horizontal differences occupy the first N outputs and
/// vertical differences the next N.
class FiniteDifferenceOperator final : public LinearOperator {
public:
  FiniteDifferenceOperator(std::size_t width, std::size_t height,
                           DifferenceAxes axes)
      : LinearOperator(width * height,
                       width * height * (axes == DifferenceAxes::both ? 2 : 1)),
        width_(width), height_(height), axes_(axes) {}

  OperatorKind kind() const noexcept override {
    return OperatorKind::finite_difference_stack;
  }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override {
    ComplexVector y(codomain_dim());
    std::size_t offset = 0;
    if (axes_ != DifferenceAxes::vertical) {
      forward_diff(x.re(), y.re(), offset, true);
      forward_diff(x.im(), y.im(), offset, true);
      offset += domain_dim();
    }
    if (axes_ != DifferenceAxes::horizontal) {
      forward_diff(x.re(), y.re(), offset, false);
      forward_diff(x.im(), y.im(), offset, false);
    }
    return y;
  }

  ComplexVector do_adjoint(const ComplexVector &y) const override {
    ComplexVector x(domain_dim());
    std::size_t offset = 0;
    if (axes_ != DifferenceAxes::vertical) {
      adjoint_diff(y.re(), x.re(), offset, true);
      adjoint_diff(y.im(), x.im(), offset, true);
      offset += domain_dim();
    }
    if (axes_ != DifferenceAxes::horizontal) {
      adjoint_diff(y.re(), x.re(), offset, false);
      adjoint_diff(y.im(), x.im(), offset, false);
    }
    return x;
  }

private:
  std::size_t neighbour(std::size_t r, std::size_t c, bool horizontal, int step) const {
    if (horizontal) {
      return r * width_ + (c + width_ + step) % width_;
    }
    return ((r + height_ + step) % height_) * width_ + c;
  }

  void forward_diff(std::span<const double> x, std::span<double> y,
                    std::size_t offset, bool horizontal) const {
    for (std::size_t r = 0; r < height_; ++r) {
      for (std::size_t c = 0; c < width_; ++c) {
        const std::size_t i = r * width_ + c;
        y[offset + i] = x[neighbour(r, c, horizontal, 1)] - x[i];
      }
    }
  }

  void adjoint_diff(std::span<const double> y, std::span<double> x,
                    std::size_t offset, bool horizontal) const {
    for (std::size_t r = 0; r < height_; ++r) {
      for (std::size_t c = 0; c < width_; ++c) {
        const std::size_t i = r * width_ + c;
        x[i] += y[offset + neighbour(r, c, horizontal, -1)] - y[offset + i];
      }
    }
  }

  std::size_t width_, height_;
  DifferenceAxes axes_;
};

/// Multi-level orthonormal Daubechies-4 wavelet transform. A grid with
/// height 1 is transformed as a 1D signal.
class Daubechies4Operator final : public LinearOperator {
public:
  Daubechies4Operator(std::size_t width, std::size_t height, int levels)
      : LinearOperator(width * height, width * height), width_(width),
        height_(height), levels_(levels) {
    detail::check_dyadic(width, levels, "Daubechies4Operator (width)");
    if (height > 1) {
      detail::check_dyadic(height, levels, "Daubechies4Operator (height)");
    }
  }

  OperatorKind kind() const noexcept override { return OperatorKind::daubechies4; }
  bool is_unitary() const noexcept override { return true; }
  int levels() const noexcept { return levels_; }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override {
    return height_ == 1 ? dwt4_forward(x, levels_)
                        : dwt4_forward_2d(x, width_, height_, levels_);
  }
  ComplexVector do_adjoint(const ComplexVector &y) const override {
    return height_ == 1 ? dwt4_inverse(y, levels_)
                        : dwt4_inverse_2d(y, width_, height_, levels_);
  }

private:
  std::size_t width_, height_;
  int levels_;
};

/// outer ∘ inner.
class CompositeOperator final : public LinearOperator {
public:
  CompositeOperator(OperatorPtr outer, OperatorPtr inner)
      : LinearOperator(inner->domain_dim(), outer->codomain_dim()),
        outer_(std::move(outer)), inner_(std::move(inner)) {
    detail::require_same_size(outer_->domain_dim(), inner_->codomain_dim(),
                              "CompositeOperator");
  }

  OperatorKind kind() const noexcept override { return OperatorKind::composite; }
  bool is_unitary() const noexcept override {
    return outer_->is_unitary() && inner_->is_unitary();
  }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override {
    return outer_->apply(inner_->apply(x));
  }
  ComplexVector do_adjoint(const ComplexVector &y) const override {
    return inner_->adjoint_apply(outer_->adjoint_apply(y));
  }

private:
  OperatorPtr outer_, inner_;
};

/// Vertical stack [A_1; A_2; ...] of operators sharing a domain.
class StackedOperator final : public LinearOperator {
public:
  explicit StackedOperator(std::vector<OperatorPtr> blocks)
      : LinearOperator(first_domain(blocks), total_codomain(blocks)),
        blocks_(std::move(blocks)) {}

  OperatorKind kind() const noexcept override { return OperatorKind::stacked; }
  const std::vector<OperatorPtr> &blocks() const noexcept { return blocks_; }

protected:
  ComplexVector do_apply(const ComplexVector &x) const override {
    std::vector<ComplexVector> parts;
    parts.reserve(blocks_.size());
    for (const auto &b : blocks_) {
      parts.push_back(b->apply(x));
    }
    return concat(parts);
  }

  ComplexVector do_adjoint(const ComplexVector &y) const override {
    ComplexVector x(domain_dim());
    std::size_t offset = 0;
    for (const auto &b : blocks_) {
      const ComplexVector part =
          b->adjoint_apply(slice(y, offset, b->codomain_dim()));
      x = x + part;
      offset += b->codomain_dim();
    }
    return x;
  }

private:
  static std::size_t first_domain(const std::vector<OperatorPtr> &blocks) {
    if (blocks.empty()) {
      throw DimensionError("StackedOperator: no blocks");
    }
    for (const auto &b : blocks) {
      detail::require_same_size(b->domain_dim(), blocks.front()->domain_dim(),
                                "StackedOperator domains");
    }
    return blocks.front()->domain_dim();
  }

  static std::size_t total_codomain(const std::vector<OperatorPtr> &blocks) {
    std::size_t total = 0;
    for (const auto &b : blocks) {
      total += b->codomain_dim();
    }
    return total;
  }

  std::vector<OperatorPtr> blocks_;
};

// ---------------------------------------------------------------------------
// Factories.

inline OperatorPtr make_identity(std::size_t n) {
  return std::make_shared<IdentityOperator>(n);
}

inline OperatorPtr make_diagonal(ComplexVector d) {
  return std::make_shared<DiagonalOperator>(std::move(d));
}

inline OperatorPtr make_masked_dft(std::size_t width, std::size_t height,
                                   const std::vector<bool> &mask) {
  return std::make_shared<MaskedDftOperator>(width, height, mask);
}

inline OperatorPtr make_sense(std::size_t width, std::size_t height,
                              std::vector<ComplexVector> sensitivities,
                              const std::vector<bool> &mask) {
  return std::make_shared<SenseOperator>(width, height, std::move(sensitivities), mask);
}

inline OperatorPtr make_finite_difference(std::size_t width, std::size_t height,
                                          DifferenceAxes axes = DifferenceAxes::both) {
  return std::make_shared<FiniteDifferenceOperator>(width, height, axes);
}

inline OperatorPtr make_daubechies4(std::size_t width, std::size_t height,
                                    int levels) {
  return std::make_shared<Daubechies4Operator>(width, height, levels);
}

inline OperatorPtr compose(OperatorPtr outer, OperatorPtr inner) {
  return std::make_shared<CompositeOperator>(std::move(outer), std::move(inner));
}

inline OperatorPtr stack(std::vector<OperatorPtr> blocks) {
  return std::make_shared<StackedOperator>(std::move(blocks));
}

// ---------------------------------------------------------------------------

enum class SpectralMethod { power_iteration, lanczos };

struct PowerIterationOptions {
  double tol = 1e-9;
  int max_iter = 5000;
  std::uint64_t seed = 0x5EEDCAFEF00DULL;
  SpectralMethod method = SpectralMethod::lanczos;
  double lanczos_tol = 1e-8;
  int max_lanczos_steps = 600;
};

/// Largest eigenvalue of A^H A (i.e. ||A||^2) by power iteration. Stops when
/// successive Rayleigh quotients agree to `tol` relative. The result
/// approaches the true value from below.
inline double spectral_norm_sq(const LinearOperator &op, double tol = 1e-9,
                               int max_iter = 5000,
                               std::uint64_t seed = PowerIterationOptions{}.seed) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("spectral_norm_sq: tol must be positive");
  }
  SplitMix64 rng(seed);
  ComplexVector v = random_complex(op.domain_dim(), rng);
  v = (1.0 / norm2(v)) * v;
  double previous = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const ComplexVector w = op.adjoint_apply(op.apply(v));
    const double rayleigh = inner(v, w);
    const double wn = norm2(w);
    if (wn == 0.0) {
      return 0.0;
    }
    if (it > 1 && std::abs(rayleigh - previous) <= tol * std::abs(rayleigh)) {
      return rayleigh;
    }
    previous = rayleigh;
    v = (1.0 / wn) * w;
  }
  throw ConvergenceError("spectral_norm_sq: no convergence within " +
                             std::to_string(max_iter) + " iterations",
                         previous);
}

namespace detail {

// Largest eigenvalue of the symmetric tridiagonal matrix (alpha, beta) by
// Sturm-sequence bisection.
inline double tridiagonal_max_eig(const std::vector<double> &alpha,
                                  const std::vector<double> &beta) {
  const std::size_t n = alpha.size();
  if (n == 1) {
    return alpha[0];
  }
  double lo = alpha[0], hi = alpha[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(beta[i - 1]) : 0.0) +
                     (i + 1 < n ? std::abs(beta[i]) : 0.0);
    lo = std::min(lo, alpha[i] - r);
    hi = std::max(hi, alpha[i] + r);
  }
  // Number of eigenvalues strictly below x.
  auto count_below = [&](double x) {
    std::size_t count = 0;
    double d = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double b2 = i > 0 ? beta[i - 1] * beta[i - 1] : 0.0;
      d = alpha[i] - x - (i > 0 ? b2 / d : 0.0);
      if (d == 0.0) {
        d = -1e-300;
      }
      if (d < 0.0) {
        ++count;
      }
    }
    return count;
  };
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(mid) < n) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace detail

/// ||A||^2 by Lanczos on A^H A (three-term recurrence, no
/// reorthogonalization: lost orthogonality only duplicates Ritz values, the
/// largest one still converges to ||A||^2 from below). Stops when successive
/// largest Ritz values agree to `tol` relative.
inline double spectral_norm_sq_lanczos(const LinearOperator &op, double tol = 1e-8,
                                       int max_steps = 600,
                                       std::uint64_t seed = PowerIterationOptions{}.seed) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("spectral_norm_sq_lanczos: tol must be positive");
  }
  const std::size_t n = op.domain_dim();
  SplitMix64 rng(seed);
  ComplexVector v = random_complex(n, rng);
  v = (1.0 / norm2(v)) * v;
  ComplexVector v_prev(n);
  std::vector<double> alpha, beta;
  double previous = 0.0;
  for (int j = 0; j < max_steps; ++j) {
    ComplexVector w = op.adjoint_apply(op.apply(v));
    // Real inner product: the recursion runs on R^{2N}.
    const double a = inner(v, w);
    const double b_prev = beta.empty() ? 0.0 : beta.back();
    for (std::size_t i = 0; i < n; ++i) {
      w.re()[i] -= a * v.re()[i] + b_prev * v_prev.re()[i];
      w.im()[i] -= a * v.im()[i] + b_prev * v_prev.im()[i];
    }
    alpha.push_back(a);
    const double ritz = detail::tridiagonal_max_eig(alpha, beta);
    const double bn = norm2(w);
    if (j > 0 && std::abs(ritz - previous) <= tol * std::abs(ritz)) {
      return ritz;
    }
    if (bn <= 1e-14 * std::max(1.0, std::abs(ritz))) {
      return ritz; // invariant subspace: exact
    }
    previous = ritz;
    beta.push_back(bn);
    v_prev = std::move(v);
    v = (1.0 / bn) * w;
  }
  throw ConvergenceError("spectral_norm_sq_lanczos: no convergence within " +
                             std::to_string(max_steps) + " steps",
                         previous);
}

inline double spectral_norm_sq(const LinearOperator &op,
                               const PowerIterationOptions &opts) {
  if (opts.method == SpectralMethod::lanczos) {
    return spectral_norm_sq_lanczos(op, opts.lanczos_tol, opts.max_lanczos_steps, opts.seed);
  }
  return spectral_norm_sq(op, opts.tol, opts.max_iter, opts.seed);
}

} // namespace palmnut
