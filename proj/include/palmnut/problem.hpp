#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <vector>

#include "palmnut/errors.hpp"
#include "palmnut/operators.hpp"
#include "palmnut/regularizers.hpp"
#include "palmnut/vector.hpp"

namespace palmnut {

/// Safety factor applied to power-iteration estimates of ||A||^2, which
/// approach the true value from below.
inline constexpr double kSpectralInflation = 1.01;

/// Tolerance of the unit-modulus checks on q.
inline constexpr double kDebugModulusTol = 1e-9;
inline constexpr double kObjectiveModulusTol = 1e-6;

/// How the magnitude block is handled by the alternating-minimization
/// baseline's inner solver.
enum class MagnitudeSubproblem {
  quadratic, // data term plus nothing/Tikhonov: linear CG
  smooth,    // Huber: nonlinear CG
  nonsmooth, // l1: monotone FISTA
};

namespace detail {

// max(1, max_n |q_n|^2). Rounding excess on the unit circle is ignored so
// unit-modulus points reproduce the iteration-independent bound bitwise.
inline double modulus_sq_factor(const ComplexVector &q) {
  double f = 1.0;
  for (std::size_t n = 0; n < q.size(); ++n) {
    f = std::max(f, std::norm(q[n]));
  }
  return f <= 1.0 + kDebugModulusTol ? 1.0 : f;
}

inline void check_unit_modulus(const ComplexVector &q, double tol, const char *what) {
  const double v = unit_modulus_violation(q);
  if (v > tol) {
    throw NumericError(std::string(what) + ": q violates |q_n| = 1 by " +
                       std::to_string(v));
  }
}

// Shared magnitude-regularizer plumbing. R1 either folds into the smooth
// part (Huber, Tikhonov, none) or is the nonsmooth term F (l1).
class MagnitudePenalty {
public:
  MagnitudePenalty(RegularizerSpec r1, std::size_t n, const PowerIterationOptions &opts)
      : r1_(std::move(r1)) {
    const std::size_t dom = regularizer_domain(r1_);
    if (dom != 0) {
      require_same_size(dom, n, "R1 domain");
    }
    smooth_ = is_smooth(r1_);
    lipschitz_ = smooth_ ? regularizer_lipschitz(r1_, opts) : 0.0;
  }

  const RegularizerSpec &spec() const noexcept { return r1_; }
  bool smooth() const noexcept { return smooth_; }
  double lipschitz() const noexcept { return lipschitz_; }

  double value(const RealVector &m) const { return regularizer_value(r1_, to_complex(m)); }

  RealVector gradient(const RealVector &m) const {
    if (!smooth_ || std::holds_alternative<NoRegularizer>(r1_)) {
      return RealVector(m.size());
    }
    return real_part(regularizer_gradient(r1_, to_complex(m)));
  }

  RealVector prox(const RealVector &w, double c) const {
    if (smooth_) {
      return w;
    }
    return prox_l1_unitary(w, c, std::get<L1UnitaryReg>(r1_));
  }

  RealVector hessian_apply(const RealVector &v) const {
    if (const auto *t = std::get_if<TikhonovReg>(&r1_)) {
      return real_part(tikhonov_gradient(to_complex(v), *t));
    }
    return RealVector(v.size());
  }

  MagnitudeSubproblem subproblem() const {
    if (!smooth_) {
      return MagnitudeSubproblem::nonsmooth;
    }
    return is_quadratic(r1_) ? MagnitudeSubproblem::quadratic
                             : MagnitudeSubproblem::smooth;
  }

private:
  RegularizerSpec r1_;
  bool smooth_ = true;
  double lipschitz_ = 0.0;
};

class PhasePenalty {
public:
  PhasePenalty(RegularizerSpec r2, std::size_t n, const PowerIterationOptions &opts)
      : r2_(std::move(r2)) {
    if (!is_smooth(r2_)) {
      throw ConfigError("phase regularizer must be smooth: a nonsmooth R2 would "
                        "have to share the proximal step with the unit-modulus "
                        "constraint, which has no closed form here");
    }
    const std::size_t dom = regularizer_domain(r2_);
    if (dom != 0) {
      require_same_size(dom, n, "R2 domain");
    }
    lipschitz_ = regularizer_lipschitz(r2_, opts);
  }

  const RegularizerSpec &spec() const noexcept { return r2_; }
  double lipschitz() const noexcept { return lipschitz_; }
  double value(const ComplexVector &q) const { return regularizer_value(r2_, q); }
  ComplexVector gradient(const ComplexVector &q) const {
    return regularizer_gradient(r2_, q);
  }

private:
  RegularizerSpec r2_;
  double lipschitz_ = 0.0;
};

} // namespace detail

/// Which PALM term each penalty feeds. The constraint indicator is always G.
struct TermAssociation {
  bool r1_in_smooth_part; // false: R1 is F
  bool r2_in_smooth_part; // always true for supported configurations
};

/// min_{m, q} 1/2 ||A(m ⊙ q) - b||^2 + R1(m) + R2(q) + I_V(q).
class MagPhaseProblem {
public:
  MagPhaseProblem(OperatorPtr a_op, ComplexVector b, RegularizerSpec r1,
                  RegularizerSpec r2, const PowerIterationOptions &opts = {})
      : a_(std::move(a_op)), b_(std::move(b)),
        r1_(std::move(r1), a_->domain_dim(), opts),
        r2_(std::move(r2), a_->domain_dim(), opts) {
    detail::require_same_size(a_->codomain_dim(), b_.size(), "MagPhaseProblem data");
    a_norm_sq_ = kSpectralInflation * spectral_norm_sq(*a_, opts);
    ahb_ = a_->adjoint_apply(b_);
  }

  std::size_t magnitude_size() const noexcept { return a_->domain_dim(); }
  std::size_t phase_size() const noexcept { return a_->domain_dim(); }
  const LinearOperator &forward_operator() const noexcept { return *a_; }
  const ComplexVector &data() const noexcept { return b_; }
  const RegularizerSpec &r1() const noexcept { return r1_.spec(); }
  const RegularizerSpec &r2() const noexcept { return r2_.spec(); }

  TermAssociation association() const noexcept { return {r1_.smooth(), true}; }

  /// Inflated ||A||^2 estimate.
  double a_norm_sq() const noexcept { return a_norm_sq_; }

  double data_fidelity(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
#ifndef NDEBUG
    detail::check_unit_modulus(q, kDebugModulusTol, "data_fidelity");
#endif
    return 0.5 * norm_sq(a_->apply(hadamard(m, q)) - b_);
  }

  /// Smooth part H: data term plus whichever penalties are smooth.
  double smooth_value(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
    double h = 0.5 * norm_sq(a_->apply(hadamard(m, q)) - b_) + r2_.value(q);
    if (r1_.smooth()) {
      h += r1_.value(m);
    }
    return h;
  }

  /// Nonsmooth magnitude term F (0 when R1 is smooth).
  double magnitude_penalty(const RealVector &m) const {
    return r1_.smooth() ? 0.0 : r1_.value(m);
  }

  double objective(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
    detail::check_unit_modulus(q, kObjectiveModulusTol, "objective");
    return 0.5 * norm_sq(a_->apply(hadamard(m, q)) - b_) + r1_.value(m) +
           r2_.value(q);
  }

  RealVector grad_m(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
    RealVector g = real_conj_product(q, normal_residual(m, q));
    if (r1_.smooth()) {
      g = g + r1_.gradient(m);
    }
    return g;
  }

  ComplexVector grad_q(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
    return hadamard(m, normal_residual(m, q)) + r2_.gradient(q);
  }

  RealVector prox_magnitude(const RealVector &w, double c) const {
    return r1_.prox(w, c);
  }

  /// ||A||^2 plus the smooth-R1 Lipschitz term, valid for any unit-modulus q.
  double bound_c() const noexcept { return a_norm_sq_ + r1_.lipschitz(); }

  /// Bound at an arbitrary phase point (e.g. an extrapolated one with |q_n| > 1).
  double bound_c(const ComplexVector &q) const {
    return a_norm_sq_ * detail::modulus_sq_factor(q) + r1_.lipschitz();
  }

  double bound_d_scalar(const RealVector &m) const {
    const double mi = norm_inf(m);
    return a_norm_sq_ * mi * mi + r2_.lipschitz();
  }

  /// Coordinatewise bound ||A||^2 m_n^2 plus the R2 Lipschitz term.
  RealVector bound_d_vector(const RealVector &m) const {
    RealVector d(m.size());
    for (std::size_t n = 0; n < m.size(); ++n) {
      d[n] = a_norm_sq_ * m[n] * m[n] + r2_.lipschitz();
    }
    return d;
  }

  MagnitudeSubproblem magnitude_subproblem() const { return r1_.subproblem(); }

  /// Hessian of the magnitude subproblem at fixed q (quadratic R1 only).
  RealVector hessian_m_apply(const ComplexVector &q, const RealVector &v) const {
    const ComplexVector ata = a_->adjoint_apply(a_->apply(hadamard(v, q)));
    return real_conj_product(q, ata) + r1_.hessian_apply(v);
  }

private:
  void check_sizes(const RealVector &m, const ComplexVector &q) const {
    detail::require_same_size(m.size(), a_->domain_dim(), "magnitude");
    detail::require_same_size(q.size(), a_->domain_dim(), "phase");
  }

  // A^H A (m ⊙ q) - A^H b
  ComplexVector normal_residual(const RealVector &m, const ComplexVector &q) const {
    return a_->adjoint_apply(a_->apply(hadamard(m, q))) - ahb_;
  }

  OperatorPtr a_;
  ComplexVector b_;
  detail::MagnitudePenalty r1_;
  detail::PhasePenalty r2_;
  double a_norm_sq_ = 0.0;
  ComplexVector ahb_;
};

/// Shared magnitude across J repetitions with A = identity:
/// R1(m) + sum_j 1/2 ||m ⊙ q_j - b_j||^2 + R2(q_j).
/// The phase variable is the concatenation [q_1; ...; q_J].
class MultiRepProblem {
public:
  MultiRepProblem(std::vector<ComplexVector> b_list, RegularizerSpec r1,
                  RegularizerSpec r2, const PowerIterationOptions &opts = {})
      : b_(std::move(b_list)), n_(first_size(b_)), r1_(std::move(r1), n_, opts),
        r2_(std::move(r2), n_, opts) {
    for (const auto &b : b_) {
      detail::require_same_size(b.size(), n_, "MultiRepProblem data");
    }
    a_norm_sq_ = kSpectralInflation * spectral_norm_sq(IdentityOperator(n_), opts);
  }

  std::size_t repetitions() const noexcept { return b_.size(); }
  std::size_t magnitude_size() const noexcept { return n_; }
  std::size_t phase_size() const noexcept { return n_ * b_.size(); }
  const std::vector<ComplexVector> &data() const noexcept { return b_; }
  double a_norm_sq() const noexcept { return a_norm_sq_; }

  ComplexVector phase_block(const ComplexVector &q, std::size_t j) const {
    return slice(q, j * n_, n_);
  }

  double data_fidelity(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
    double s = 0.0;
    for (std::size_t j = 0; j < b_.size(); ++j) {
      s += 0.5 * norm_sq(hadamard(m, phase_block(q, j)) - b_[j]);
    }
    return s;
  }

  double smooth_value(const RealVector &m, const ComplexVector &q) const {
    double h = data_fidelity(m, q);
    for (std::size_t j = 0; j < b_.size(); ++j) {
      h += r2_.value(phase_block(q, j));
    }
    if (r1_.smooth()) {
      h += r1_.value(m);
    }
    return h;
  }

  double magnitude_penalty(const RealVector &m) const {
    return r1_.smooth() ? 0.0 : r1_.value(m);
  }

  double objective(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
    detail::check_unit_modulus(q, kObjectiveModulusTol, "multirep_objective");
    double v = r1_.value(m);
    for (std::size_t j = 0; j < b_.size(); ++j) {
      const ComplexVector qj = phase_block(q, j);
      v += 0.5 * norm_sq(hadamard(m, qj) - b_[j]) + r2_.value(qj);
    }
    return v;
  }

  RealVector grad_m(const RealVector &m, const ComplexVector &q) const {
    check_sizes(m, q);
    RealVector g(n_);
    for (std::size_t j = 0; j < b_.size(); ++j) {
      const ComplexVector qj = phase_block(q, j);
      g = g + real_conj_product(qj, hadamard(m, qj) - b_[j]);
    }
    if (r1_.smooth()) {
      g = g + r1_.gradient(m);
    }
    return g;
  }

  ComplexVector grad_qj(const RealVector &m, const ComplexVector &q, std::size_t j) const {
    check_sizes(m, q);
    const ComplexVector qj = phase_block(q, j);
    return hadamard(m, hadamard(m, qj) - b_[j]) + r2_.gradient(qj);
  }

  ComplexVector grad_q(const RealVector &m, const ComplexVector &q) const {
    std::vector<ComplexVector> blocks;
    blocks.reserve(b_.size());
    for (std::size_t j = 0; j < b_.size(); ++j) {
      blocks.push_back(grad_qj(m, q, j));
    }
    return concat(blocks);
  }

  RealVector prox_magnitude(const RealVector &w, double c) const {
    return r1_.prox(w, c);
  }

  /// J ||A||^2 (each repetition contributes |q_j|^2 = 1) plus the R1 term.
  double bound_c() const noexcept {
    return static_cast<double>(b_.size()) * a_norm_sq_ + r1_.lipschitz();
  }

  double bound_c(const ComplexVector &q) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < b_.size(); ++j) {
      acc += detail::modulus_sq_factor(phase_block(q, j));
    }
    return acc * a_norm_sq_ + r1_.lipschitz();
  }

  double bound_d_scalar(const RealVector &m) const {
    const double mi = norm_inf(m);
    return a_norm_sq_ * mi * mi + r2_.lipschitz();
  }

  RealVector bound_d_vector(const RealVector &m) const {
    RealVector d(phase_size());
    for (std::size_t j = 0; j < b_.size(); ++j) {
      for (std::size_t n = 0; n < n_; ++n) {
        d[j * n_ + n] = a_norm_sq_ * m[n] * m[n] + r2_.lipschitz();
      }
    }
    return d;
  }

  MagnitudeSubproblem magnitude_subproblem() const { return r1_.subproblem(); }

  RealVector hessian_m_apply(const ComplexVector &q, const RealVector &v) const {
    RealVector h(n_);
    for (std::size_t j = 0; j < b_.size(); ++j) {
      const ComplexVector qj = phase_block(q, j);
      h = h + real_conj_product(qj, hadamard(v, qj));
    }
    return h + r1_.hessian_apply(v);
  }

private:
  static std::size_t first_size(const std::vector<ComplexVector> &b) {
    if (b.empty()) {
      throw ConfigError("MultiRepProblem: at least one repetition required");
    }
    return b.front().size();
  }

  void check_sizes(const RealVector &m, const ComplexVector &q) const {
    detail::require_same_size(m.size(), n_, "magnitude");
    detail::require_same_size(q.size(), phase_size(), "phase");
  }

  std::vector<ComplexVector> b_;
  std::size_t n_;
  detail::MagnitudePenalty r1_;
  detail::PhasePenalty r2_;
  double a_norm_sq_ = 0.0;
};

/// Interface the solvers rely on. Both problem classes model it.
template <class P>
concept MagPhaseModel = requires(const P &p, const RealVector &m,
                                 const ComplexVector &q, double c) {
  { p.magnitude_size() } -> std::convertible_to<std::size_t>;
  { p.phase_size() } -> std::convertible_to<std::size_t>;
  { p.objective(m, q) } -> std::convertible_to<double>;
  { p.smooth_value(m, q) } -> std::convertible_to<double>;
  { p.magnitude_penalty(m) } -> std::convertible_to<double>;
  { p.grad_m(m, q) } -> std::same_as<RealVector>;
  { p.grad_q(m, q) } -> std::same_as<ComplexVector>;
  { p.prox_magnitude(m, c) } -> std::same_as<RealVector>;
  { p.bound_c() } -> std::convertible_to<double>;
  { p.bound_c(q) } -> std::convertible_to<double>;
  { p.bound_d_scalar(m) } -> std::convertible_to<double>;
  { p.bound_d_vector(m) } -> std::same_as<RealVector>;
  { p.magnitude_subproblem() } -> std::same_as<MagnitudeSubproblem>;
  { p.hessian_m_apply(q, m) } -> std::same_as<RealVector>;
};

/// Phase-parameterized gradient: Im{ e^{-ip} ⊙ grad_q(m, e^{ip}) }.
template <MagPhaseModel P>
RealVector grad_p(const P &prob, const RealVector &m, const RealVector &p) {
  const ComplexVector q = exp_i(p);
  const ComplexVector g = prob.grad_q(m, q);
  RealVector out(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) {
    out[n] = q.re()[n] * g.im()[n] - q.im()[n] * g.re()[n];
  }
  return out;
}

// Free-function spellings of the multi-repetition API.
inline double multirep_objective(const MultiRepProblem &prob, const RealVector &m,
                                 const ComplexVector &q) {
  return prob.objective(m, q);
}
inline RealVector multirep_grad_m(const MultiRepProblem &prob, const RealVector &m,
                                  const ComplexVector &q) {
  return prob.grad_m(m, q);
}
inline ComplexVector multirep_grad_qj(const MultiRepProblem &prob, const RealVector &m,
                                      const ComplexVector &q, std::size_t j) {
  return prob.grad_qj(m, q, j);
}

} // namespace palmnut
