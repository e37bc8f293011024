#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "palmnut/errors.hpp"
#include "palmnut/operators.hpp"
#include "palmnut/random.hpp"
#include "palmnut/vector.hpp"

namespace palmnut {

/// h_xi(t): quadratic for |t| <= xi, linear beyond.
inline double huber_scalar(double t, double xi) {
  const double a = std::abs(t);
  return a <= xi ? a * a / (2.0 * xi) : a - 0.5 * xi;
}

/// lambda * sum_l h_xi( sqrt( sum_t |[B_t x]_l|^2 ) ).
struct HuberStackReg {
  double lambda;
  double xi;
  std::vector<OperatorPtr> transforms;

  HuberStackReg(double lambda_, double xi_, std::vector<OperatorPtr> transforms_)
      : lambda(lambda_), xi(xi_), transforms(std::move(transforms_)) {
    if (!(lambda > 0.0) || !(xi > 0.0)) {
      throw ConfigError("HuberStackReg: lambda and xi must be positive");
    }
    if (transforms.empty()) {
      throw ConfigError("HuberStackReg: at least one transform required");
    }
    for (const auto &b : transforms) {
      detail::require_same_size(b->domain_dim(), transforms.front()->domain_dim(),
                                "HuberStackReg domains");
      detail::require_same_size(b->codomain_dim(), transforms.front()->codomain_dim(),
                                "HuberStackReg codomains");
    }
  }

  std::size_t domain_dim() const { return transforms.front()->domain_dim(); }
  std::size_t coefficient_count() const { return transforms.front()->codomain_dim(); }
};

/// (lambda / 2) ||C x||^2.
struct TikhonovReg {
  double lambda;
  OperatorPtr c_op;

  TikhonovReg(double lambda_, OperatorPtr c_op_)
      : lambda(lambda_), c_op(std::move(c_op_)) {
    if (!(lambda > 0.0)) {
      throw ConfigError("TikhonovReg: lambda must be positive");
    }
  }
};

namespace detail {

// Numerical unitarity probe: norm preservation and T^H T = I on random inputs.
inline bool probe_unitary(const LinearOperator &t, double tol) {
  if (t.domain_dim() != t.codomain_dim()) {
    return false;
  }
  SplitMix64 rng(0x0DDBA11ULL);
  for (int trial = 0; trial < 3; ++trial) {
    const ComplexVector x = random_complex(t.domain_dim(), rng);
    const ComplexVector tx = t.apply(x);
    const double nx = norm2(x);
    if (std::abs(norm2(tx) - nx) > tol * nx) {
      return false;
    }
    if (norm2(t.adjoint_apply(tx) - x) > tol * nx) {
      return false;
    }
  }
  return true;
}

} // namespace detail

/// lambda * ||T x||_1 for a unitary transform T.
struct L1UnitaryReg {
  double lambda;
  OperatorPtr t_op;

  L1UnitaryReg(double lambda_, OperatorPtr t_op_)
      : lambda(lambda_), t_op(std::move(t_op_)) {
    if (!(lambda > 0.0)) {
      throw ConfigError("L1UnitaryReg: lambda must be positive");
    }
    if (!detail::probe_unitary(*t_op, 1e-10)) {
      throw ConfigError("L1UnitaryReg: transform is not unitary; the closed-form "
                        "l1 proximal operator requires T^H = T^{-1}");
    }
  }
};

struct NoRegularizer {};

using RegularizerSpec =
    std::variant<NoRegularizer, HuberStackReg, TikhonovReg, L1UnitaryReg>;

// ---------------------------------------------------------------------------
// Huber stack.

namespace detail {

struct HuberEvaluation {
  std::vector<ComplexVector> coefficients; // B_t x for each t
  RealVector magnitudes;                   // sqrt(sum_t |[B_t x]_l|^2)
};

inline HuberEvaluation huber_evaluate(const ComplexVector &x,
                                      const HuberStackReg &reg) {
  detail::require_same_size(x.size(), reg.domain_dim(), "HuberStackReg");
  HuberEvaluation ev;
  ev.coefficients.reserve(reg.transforms.size());
  for (const auto &b : reg.transforms) {
    ev.coefficients.push_back(b->apply(x));
  }
  ev.magnitudes = RealVector(reg.coefficient_count());
  for (std::size_t l = 0; l < reg.coefficient_count(); ++l) {
    double s = 0.0;
    for (const auto &c : ev.coefficients) {
      s += c.re()[l] * c.re()[l] + c.im()[l] * c.im()[l];
    }
    ev.magnitudes[l] = std::sqrt(s);
  }
  return ev;
}

} // namespace detail

inline double huber_stack_value(const ComplexVector &x, const HuberStackReg &reg) {
  const auto ev = detail::huber_evaluate(x, reg);
  double s = 0.0;
  for (double v : ev.magnitudes.values()) {
    s += huber_scalar(v, reg.xi);
  }
  return reg.lambda * s;
}

inline double huber_stack_value(const RealVector &x, const HuberStackReg &reg) {
  return huber_stack_value(to_complex(x), reg);
}

/// Diagonal of W(x): 1 / max{xi, magnitude_l}.
inline RealVector huber_weights(const ComplexVector &x, const HuberStackReg &reg) {
  const auto ev = detail::huber_evaluate(x, reg);
  RealVector w(ev.magnitudes.size());
  for (std::size_t l = 0; l < w.size(); ++l) {
    w[l] = 1.0 / std::max(reg.xi, ev.magnitudes[l]);
  }
  return w;
}

inline RealVector huber_weights(const RealVector &x, const HuberStackReg &reg) {
  return huber_weights(to_complex(x), reg);
}

/// lambda * sum_t B_t^H W(x) B_t x.
inline ComplexVector huber_stack_gradient(const ComplexVector &x,
                                          const HuberStackReg &reg) {
  const auto ev = detail::huber_evaluate(x, reg);
  ComplexVector g(x.size());
  for (std::size_t t = 0; t < reg.transforms.size(); ++t) {
    ComplexVector weighted = ev.coefficients[t];
    for (std::size_t l = 0; l < weighted.size(); ++l) {
      const double w = reg.lambda / std::max(reg.xi, ev.magnitudes[l]);
      weighted.re()[l] *= w;
      weighted.im()[l] *= w;
    }
    g = g + reg.transforms[t]->adjoint_apply(weighted);
  }
  return g;
}

/// Real-variable gradient: Re{ lambda * sum_t B_t^H W(x) B_t x }.
inline RealVector huber_stack_gradient(const RealVector &x, const HuberStackReg &reg) {
  return real_part(huber_stack_gradient(to_complex(x), reg));
}

/// (lambda / xi) * || sum_t B_t^H B_t ||.
inline double huber_lipschitz_term(const HuberStackReg &reg,
                                   const PowerIterationOptions &opts = {}) {
  const OperatorPtr stacked = reg.transforms.size() == 1 ? reg.transforms.front()
                                                         : stack(reg.transforms);
  return reg.lambda / reg.xi * spectral_norm_sq(*stacked, opts);
}

// ---------------------------------------------------------------------------
// Tikhonov.

inline double tikhonov_value(const ComplexVector &q, const TikhonovReg &reg) {
  return 0.5 * reg.lambda * norm_sq(reg.c_op->apply(q));
}

inline ComplexVector tikhonov_gradient(const ComplexVector &q, const TikhonovReg &reg) {
  return reg.lambda * reg.c_op->adjoint_apply(reg.c_op->apply(q));
}

inline double tikhonov_lipschitz_term(const TikhonovReg &reg,
                                      const PowerIterationOptions &opts = {}) {
  return reg.lambda * spectral_norm_sq(*reg.c_op, opts);
}

// ---------------------------------------------------------------------------
// Proximal operators.

/// Projection onto the unit-modulus set: z_n / |z_n|, with 0 mapped to 1.
inline ComplexVector prox_unit_modulus(const ComplexVector &z) {
  ComplexVector out(z.size());
  for (std::size_t n = 0; n < z.size(); ++n) {
    const double r = std::hypot(z.re()[n], z.im()[n]);
    if (r == 0.0) {
      out.re()[n] = 1.0;
      out.im()[n] = 0.0;
    } else {
      out.re()[n] = z.re()[n] / r;
      out.im()[n] = z.im()[n] / r;
    }
  }
  return out;
}

/// Complex soft threshold: shrink each modulus by tau, keep its angle.
inline ComplexVector soft_threshold(const ComplexVector &a, double tau) {
  ComplexVector out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double r = std::hypot(a.re()[n], a.im()[n]);
    if (r > tau) {
      const double s = (r - tau) / r;
      out.re()[n] = s * a.re()[n];
      out.im()[n] = s * a.im()[n];
    }
  }
  return out;
}

/// argmin_x lambda ||T x||_1 + (c/2) ||x - w||^2 for unitary T.
inline ComplexVector prox_l1_unitary(const ComplexVector &w, double c,
                                     const L1UnitaryReg &reg) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("prox_l1_unitary: c must be positive");
  }
  return reg.t_op->adjoint_apply(soft_threshold(reg.t_op->apply(w), reg.lambda / c));
}

inline RealVector prox_l1_unitary(const RealVector &w, double c,
                                  const L1UnitaryReg &reg) {
  return real_part(prox_l1_unitary(to_complex(w), c, reg));
}

inline double l1_value(const ComplexVector &x, const L1UnitaryReg &reg) {
  const ComplexVector tx = reg.t_op->apply(x);
  double s = 0.0;
  for (std::size_t n = 0; n < tx.size(); ++n) {
    s += std::hypot(tx.re()[n], tx.im()[n]);
  }
  return reg.lambda * s;
}

// ---------------------------------------------------------------------------
// Dispatch over RegularizerSpec.

inline bool is_smooth(const RegularizerSpec &spec) {
  return !std::holds_alternative<L1UnitaryReg>(spec);
}

inline bool is_quadratic(const RegularizerSpec &spec) {
  return std::holds_alternative<NoRegularizer>(spec) ||
         std::holds_alternative<TikhonovReg>(spec);
}

inline double regularizer_value(const RegularizerSpec &spec, const ComplexVector &x) {
  return std::visit(
      [&](const auto &r) -> double {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, NoRegularizer>) {
          return 0.0;
        } else if constexpr (std::is_same_v<R, HuberStackReg>) {
          return huber_stack_value(x, r);
        } else if constexpr (std::is_same_v<R, TikhonovReg>) {
          return tikhonov_value(x, r);
        } else {
          return l1_value(x, r);
        }
      },
      spec);
}

/// Gradient of a smooth regularizer (zero vector for NoRegularizer).
inline ComplexVector regularizer_gradient(const RegularizerSpec &spec,
                                          const ComplexVector &x) {
  return std::visit(
      [&](const auto &r) -> ComplexVector {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, NoRegularizer>) {
          return ComplexVector(x.size());
        } else if constexpr (std::is_same_v<R, HuberStackReg>) {
          return huber_stack_gradient(x, r);
        } else if constexpr (std::is_same_v<R, TikhonovReg>) {
          return tikhonov_gradient(x, r);
        } else {
          throw std::logic_error("regularizer_gradient: l1 penalty is not smooth");
        }
      },
      spec);
}

/// Lipschitz constant of the regularizer gradient (0 for NoRegularizer).
inline double regularizer_lipschitz(const RegularizerSpec &spec,
                                    const PowerIterationOptions &opts = {}) {
  return std::visit(
      [&](const auto &r) -> double {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, NoRegularizer>) {
          return 0.0;
        } else if constexpr (std::is_same_v<R, HuberStackReg>) {
          return huber_lipschitz_term(r, opts);
        } else if constexpr (std::is_same_v<R, TikhonovReg>) {
          return tikhonov_lipschitz_term(r, opts);
        } else {
          throw std::logic_error("regularizer_lipschitz: l1 penalty is not smooth");
        }
      },
      spec);
}

/// Domain length the regularizer expects, or 0 when unconstrained.
inline std::size_t regularizer_domain(const RegularizerSpec &spec) {
  return std::visit(
      [](const auto &r) -> std::size_t {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, NoRegularizer>) {
          return 0;
        } else if constexpr (std::is_same_v<R, HuberStackReg>) {
          return r.domain_dim();
        } else if constexpr (std::is_same_v<R, TikhonovReg>) {
          return r.c_op->domain_dim();
        } else {
          return r.t_op->domain_dim();
        }
      },
      spec);
}

} // namespace palmnut
