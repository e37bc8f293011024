#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "palmnut/errors.hpp"
#include "palmnut/problem.hpp"
#include "palmnut/regularizers.hpp"
#include "palmnut/vector.hpp"

namespace palmnut {

/// Image-quality metric evaluated on (m, q) for trace logging.
using TraceMetric = std::function<double(const RealVector &, const ComplexVector &)>;

struct SolverConfig {
  int max_outer_iter = 1000;
  double rel_cost_tol = 0.0;
  int inner_iter = 10; // AM only: iterations per block subproblem
  int phase_steps_per_outer = 1; // PALM family: q-block steps per outer iteration
  bool record_nrmse = false;
  TraceMetric metric; // required when record_nrmse is set
  std::optional<double> wall_clock_limit_s;

  void validate() const {
    if (max_outer_iter < 0) {
      throw ConfigError("SolverConfig: max_outer_iter must be >= 0");
    }
    if (rel_cost_tol < 0.0) {
      throw ConfigError("SolverConfig: rel_cost_tol must be >= 0");
    }
    if (inner_iter < 0) {
      throw ConfigError("SolverConfig: inner_iter must be >= 0");
    }
    if (phase_steps_per_outer < 1) {
      throw ConfigError("SolverConfig: phase_steps_per_outer must be >= 1");
    }
    if (record_nrmse && !metric) {
      throw ConfigError("SolverConfig: record_nrmse requires a metric");
    }
    if (wall_clock_limit_s && !(*wall_clock_limit_s > 0.0)) {
      throw ConfigError("SolverConfig: wall_clock_limit_s must be positive");
    }
  }
};

/// Iterate pair plus the momentum auxiliaries u (magnitude) and v (phase).
struct SolverState {
  RealVector m_hat;
  ComplexVector q_hat;
  RealVector u;
  ComplexVector v;
  int k = 0;

  static SolverState initial(RealVector m, ComplexVector q) {
    SolverState s;
    s.u = m;
    s.v = q;
    s.m_hat = std::move(m);
    s.q_hat = std::move(q);
    return s;
  }
};

struct TraceRecord {
  int k;
  double seconds;
  double objective;
  std::optional<double> nrmse;
};

struct SolverTrace {
  std::vector<TraceRecord> records;

  double final_objective() const { return records.back().objective; }
  std::vector<double> objectives() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto &r : records) {
      out.push_back(r.objective);
    }
    return out;
  }
};

enum class StopReason { max_iterations, cost_tolerance, wall_clock, zero_iterations };

struct SolverResult {
  SolverState state;
  SolverTrace trace;
  StopReason reason = StopReason::max_iterations;
};

/// Nesterov coefficient (k - 1) / (k + 2).
inline double momentum_coefficient(int k) {
  if (k < 1) {
    throw std::invalid_argument("momentum_coefficient: k must be >= 1");
  }
  return static_cast<double>(k - 1) / static_cast<double>(k + 2);
}

/// Where the linearized step starts when momentum is on. The standard
/// Nesterov form takes the gradient step from the extrapolated point; the
/// alternative keeps the previous iterate as the base and only evaluates
/// the gradient at the extrapolated point.
enum class MomentumAnchor { extrapolated_point, previous_iterate };

/// Selects a member of the PALM family.
struct PalmVariant {
  bool uncoupled_phase_steps = false; // coordinatewise d-vector
  bool momentum = false;
  MomentumAnchor anchor = MomentumAnchor::extrapolated_point;
  // Diagnostics: take the coordinatewise code path but fill the d-vector
  // with the scalar bound; scale the momentum coefficient (0 disables it).
  bool constant_d_vector = false;
  double momentum_scale = 1.0;
};

inline PalmVariant palm_variant() { return {}; }
inline PalmVariant palm_ut_variant() { return {.uncoupled_phase_steps = true}; }
inline PalmVariant palm_momentum_variant() { return {.momentum = true}; }
inline PalmVariant palmnut_variant() {
  return {.uncoupled_phase_steps = true, .momentum = true};
}

namespace detail {

class TraceRecorder {
public:
  explicit TraceRecorder(const SolverConfig &cfg)
      : cfg_(cfg), start_(Clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count() - excluded_;
  }

  void record(SolverTrace &trace, int k, double objective, const RealVector &m,
              const ComplexVector &q) {
    const double t = elapsed();
    const auto pause = Clock::now();
    std::optional<double> metric;
    if (cfg_.record_nrmse) {
      metric = cfg_.metric(m, q);
    }
    trace.records.push_back({k, t, objective, metric});
    excluded_ += std::chrono::duration<double>(Clock::now() - pause).count();
  }

private:
  using Clock = std::chrono::steady_clock;
  const SolverConfig &cfg_;
  Clock::time_point start_;
  double excluded_ = 0.0;
};

inline void require_finite(double objective, int k, const char *solver,
                           const std::string &extra = {}) {
  if (!std::isfinite(objective)) {
    std::ostringstream os;
    os << solver << ": non-finite objective at iteration " << k;
    if (!extra.empty()) {
      os << " (" << extra << ")";
    }
    throw NumericError(os.str());
  }
}

inline bool should_stop(const SolverConfig &cfg, const TraceRecorder &clock, int k,
                        double previous, double current, StopReason &reason) {
  if (k >= cfg.max_outer_iter) {
    reason = StopReason::max_iterations;
    return true;
  }
  if (cfg.rel_cost_tol > 0.0 &&
      std::abs(current - previous) < cfg.rel_cost_tol * std::abs(previous)) {
    reason = StopReason::cost_tolerance;
    return true;
  }
  if (cfg.wall_clock_limit_s && clock.elapsed() >= *cfg.wall_clock_limit_s) {
    reason = StopReason::wall_clock;
    return true;
  }
  return false;
}

// x + beta (x - x_prev), with beta = 0 returning x itself.
template <class V> V extrapolate(const V &x, const V &x_prev, double beta) {
  if (beta == 0.0) {
    return x;
  }
  return x + beta * (x - x_prev);
}

// z = base - (1/d) g with one scalar d.
inline ComplexVector scalar_step(const ComplexVector &base, const ComplexVector &g,
                                 double d) {
  // d = 0 only when H does not depend on q at all: stay put.
  const double step = d > 0.0 ? 1.0 / d : 0.0;
  ComplexVector z(base.size());
  for (std::size_t n = 0; n < base.size(); ++n) {
    z.re()[n] = base.re()[n] - step * g.re()[n];
    z.im()[n] = base.im()[n] - step * g.im()[n];
  }
  return z;
}

// z = base - diag(d)^{-1} g.
inline ComplexVector coordinate_step(const ComplexVector &base, const ComplexVector &g,
                                     const RealVector &d) {
  ComplexVector z(base.size());
  for (std::size_t n = 0; n < base.size(); ++n) {
    const double step = d[n] > 0.0 ? 1.0 / d[n] : 0.0;
    z.re()[n] = base.re()[n] - step * g.re()[n];
    z.im()[n] = base.im()[n] - step * g.im()[n];
  }
  return z;
}

inline RealVector gradient_step(const RealVector &base, const RealVector &g, double c) {
  const double step = 1.0 / c;
  RealVector w(base.size());
  for (std::size_t n = 0; n < base.size(); ++n) {
    w[n] = base[n] - step * g[n];
  }
  return w;
}

} // namespace detail

/// Shared driver for PALM, PALM with uncoupled step sizes, PALM with
/// momentum and PALMNUT. Magnitude block first, then phase block.
template <MagPhaseModel P>
SolverResult run_palm_family(const P &prob, const SolverState &init,
                             const SolverConfig &cfg, const PalmVariant &variant) {
  cfg.validate();
  detail::require_same_size(init.m_hat.size(), prob.magnitude_size(), "init magnitude");
  detail::require_same_size(init.q_hat.size(), prob.phase_size(), "init phase");

  SolverResult result;
  result.state = init;
  SolverState &s = result.state;
  if (s.u.size() != s.m_hat.size() || s.v.size() != s.q_hat.size()) {
    s.u = s.m_hat;
    s.v = s.q_hat;
  }

  detail::TraceRecorder clock(cfg);
  double previous = prob.objective(s.m_hat, s.q_hat);
  detail::require_finite(previous, s.k, "palm");
  clock.record(result.trace, s.k, previous, s.m_hat, s.q_hat);
  if (cfg.max_outer_iter == 0) {
    result.reason = StopReason::zero_iterations;
    return result;
  }

  const double c_unit = prob.bound_c();
  const bool anchor_extrapolated = variant.anchor == MomentumAnchor::extrapolated_point;
  for (int iter = 1;; ++iter) {
    const int k = s.k + 1;
    const double beta =
        variant.momentum ? variant.momentum_scale * momentum_coefficient(k) : 0.0;

    // Magnitude block. An extrapolated v may leave the unit circle.
    const double c = variant.momentum ? prob.bound_c(s.v) : c_unit;
    const RealVector &m_base = anchor_extrapolated ? s.u : s.m_hat;
    const RealVector w = detail::gradient_step(m_base, prob.grad_m(s.u, s.v), c);
    RealVector m_new = prob.prox_magnitude(w, c);
    RealVector u_new = detail::extrapolate(m_new, s.m_hat, beta);

    // Phase block.
    ComplexVector q_new;
    ComplexVector v_eval = s.v;
    const ComplexVector *q_base = anchor_extrapolated ? &s.v : &s.q_hat;
    ComplexVector base_storage;
    for (int rep = 0; rep < cfg.phase_steps_per_outer; ++rep) {
      const ComplexVector g = prob.grad_q(u_new, v_eval);
      ComplexVector z;
      if (variant.uncoupled_phase_steps) {
        const RealVector d = variant.constant_d_vector
                                 ? RealVector(prob.phase_size(), prob.bound_d_scalar(u_new))
                                 : prob.bound_d_vector(u_new);
        z = detail::coordinate_step(*q_base, g, d);
      } else {
        z = detail::scalar_step(*q_base, g, prob.bound_d_scalar(u_new));
      }
      q_new = prox_unit_modulus(z);
      v_eval = q_new;
      base_storage = q_new;
      q_base = &base_storage;
    }
    ComplexVector v_new = detail::extrapolate(q_new, s.q_hat, beta);

    s.m_hat = std::move(m_new);
    s.q_hat = std::move(q_new);
    s.u = std::move(u_new);
    s.v = std::move(v_new);
    s.k = k;

    const double current = prob.objective(s.m_hat, s.q_hat);
    detail::require_finite(current, s.k, "palm",
                           "c=" + std::to_string(c) +
                               ", max|m|=" + std::to_string(norm_inf(s.m_hat)));
    clock.record(result.trace, s.k, current, s.m_hat, s.q_hat);
    if (detail::should_stop(cfg, clock, iter, previous, current, result.reason)) {
      break;
    }
    previous = current;
  }
  return result;
}

template <MagPhaseModel P>
SolverResult run_palm(const P &prob, const SolverState &init, const SolverConfig &cfg) {
  return run_palm_family(prob, init, cfg, palm_variant());
}

template <MagPhaseModel P>
SolverResult run_palm_ut(const P &prob, const SolverState &init, const SolverConfig &cfg) {
  return run_palm_family(prob, init, cfg, palm_ut_variant());
}

template <MagPhaseModel P>
SolverResult run_palmnut(const P &prob, const SolverState &init, const SolverConfig &cfg) {
  return run_palm_family(prob, init, cfg, palmnut_variant());
}

// ---------------------------------------------------------------------------
// Alternating minimization baseline.

struct LineSearchOptions {
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
};

namespace detail {

/// Polak-Ribiere nonlinear CG (beta clipped at 0) with Armijo backtracking.
/// Every accepted step strictly decreases f; a failed line search leaves x
/// unchanged and ends the subproblem.
template <class V, class F, class G>
V ncg_minimize(V x, const F &f, const G &grad, int iterations, double lipschitz,
               const LineSearchOptions &ls = {}) {
  if (iterations <= 0) {
    return x;
  }
  double fx = f(x);
  V g = grad(x);
  V dir = (-1.0) * g;
  double alpha_prev = 0.0, slope_prev = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double slope = inner(g, dir);
    if (!(slope < 0.0)) {
      dir = (-1.0) * g;
      slope = -inner(g, g);
    }
    if (slope == 0.0) {
      break;
    }
    double alpha = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
    if (alpha_prev > 0.0) {
      alpha = alpha_prev * slope_prev / slope;
    }
    bool accepted = false;
    V x_trial;
    double f_trial = fx;
    for (int bt = 0; bt <= ls.max_backtracks; ++bt) {
      x_trial = x + alpha * dir;
      f_trial = f(x_trial);
      if (f_trial <= fx + ls.armijo_c1 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= ls.backtrack;
    }
    if (!accepted || !(f_trial < fx)) {
      break;
    }
    const V g_new = grad(x_trial);
    const double beta_pr = inner(g_new, g_new - g) / inner(g, g);
    dir = (-1.0) * g_new + std::max(beta_pr, 0.0) * dir;
    x = std::move(x_trial);
    fx = f_trial;
    g = g_new;
    alpha_prev = alpha;
    slope_prev = slope;
  }
  return x;
}

/// Linear CG on the quadratic magnitude subproblem H m = r, warm-started.
template <MagPhaseModel P>
RealVector magnitude_linear_cg(const P &prob, RealVector m, const ComplexVector &q,
                               int iterations) {
  RealVector r = (-1.0) * prob.grad_m(m, q);
  RealVector dir = r;
  double rr = inner(r, r);
  const double rr0 = rr;
  for (int it = 0; it < iterations && rr > 1e-30 * rr0 && rr > 0.0; ++it) {
    const RealVector hd = prob.hessian_m_apply(q, dir);
    const double curvature = inner(dir, hd);
    if (!(curvature > 0.0)) {
      break;
    }
    const double alpha = rr / curvature;
    m = m + alpha * dir;
    r = r - alpha * hd;
    const double rr_new = inner(r, r);
    dir = r + (rr_new / rr) * dir;
    rr = rr_new;
  }
  return m;
}

/// Monotone FISTA for the l1-regularized magnitude subproblem.
template <MagPhaseModel P>
RealVector magnitude_mfista(const P &prob, RealVector m, const ComplexVector &q,
                            int iterations) {
  const double lip = prob.bound_c();
  auto psi = [&](const RealVector &x) { return prob.objective(x, q); };
  RealVector y = m;
  double t = 1.0;
  double fm = psi(m);
  for (int it = 0; it < iterations; ++it) {
    const RealVector z =
        prob.prox_magnitude(gradient_step(y, prob.grad_m(y, q), lip), lip);
    const double fz = psi(z);
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    RealVector m_new = fz <= fm ? z : m;
    const double f_new = std::min(fz, fm);
    y = m_new + (t / t_new) * (z - m_new) + ((t - 1.0) / t_new) * (m_new - m);
    m = std::move(m_new);
    fm = f_new;
    t = t_new;
  }
  return m;
}

} // namespace detail

/// Alternating minimization: inexact magnitude solve, then Polak-Ribiere NCG
/// on the phase p (q = e^{ip}). The returned state carries q = e^{ip}.
template <MagPhaseModel P>
SolverResult run_am_ncg(const P &prob, const SolverState &init, const SolverConfig &cfg,
                        const LineSearchOptions &ls = {}) {
  cfg.validate();
  detail::require_same_size(init.m_hat.size(), prob.magnitude_size(), "init magnitude");
  detail::require_same_size(init.q_hat.size(), prob.phase_size(), "init phase");

  SolverResult result;
  result.state = init;
  SolverState &s = result.state;
  RealVector p = angle(s.q_hat);

  detail::TraceRecorder clock(cfg);
  double previous = prob.objective(s.m_hat, s.q_hat);
  detail::require_finite(previous, s.k, "am_ncg");
  clock.record(result.trace, s.k, previous, s.m_hat, s.q_hat);
  if (cfg.max_outer_iter == 0 || cfg.inner_iter == 0) {
    result.reason = StopReason::zero_iterations;
    return result;
  }

  for (int iter = 1;; ++iter) {
    const ComplexVector q = exp_i(p);
    RealVector m = s.m_hat;
    switch (prob.magnitude_subproblem()) {
    case MagnitudeSubproblem::quadratic:
      m = detail::magnitude_linear_cg(prob, std::move(m), q, cfg.inner_iter);
      break;
    case MagnitudeSubproblem::smooth:
      m = detail::ncg_minimize(
          std::move(m), [&](const RealVector &x) { return prob.objective(x, q); },
          [&](const RealVector &x) { return prob.grad_m(x, q); }, cfg.inner_iter,
          prob.bound_c(), ls);
      break;
    case MagnitudeSubproblem::nonsmooth:
      m = detail::magnitude_mfista(prob, std::move(m), q, cfg.inner_iter);
      break;
    }

    p = detail::ncg_minimize(
        std::move(p), [&](const RealVector &x) { return prob.objective(m, exp_i(x)); },
        [&](const RealVector &x) { return grad_p(prob, m, x); }, cfg.inner_iter,
        prob.bound_d_scalar(m), ls);

    s.m_hat = std::move(m);
    s.q_hat = exp_i(p);
    s.u = s.m_hat;
    s.v = s.q_hat;
    s.k += 1;

    const double current = prob.objective(s.m_hat, s.q_hat);
    detail::require_finite(current, s.k, "am_ncg");
    clock.record(result.trace, s.k, current, s.m_hat, s.q_hat);
    if (detail::should_stop(cfg, clock, iter, previous, current, result.reason)) {
      break;
    }
    previous = current;
  }
  return result;
}

} // namespace palmnut
