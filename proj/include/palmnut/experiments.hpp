#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "palmnut/errors.hpp"
#include "palmnut/io.hpp"
#include "palmnut/operators.hpp"
#include "palmnut/phantom.hpp"
#include "palmnut/problem.hpp"
#include "palmnut/regularizers.hpp"
#include "palmnut/solvers.hpp"

namespace palmnut {

enum class Scenario { denoise, recon, combine, ablation };
enum class SolverKind { am, palm, palm_momentum, palm_ut, palmnut };

inline std::string to_string(Scenario s) {
  switch (s) {
  case Scenario::denoise: return "denoise";
  case Scenario::recon: return "recon";
  case Scenario::combine: return "combine";
  case Scenario::ablation: return "ablation";
  }
  return "?";
}

inline std::string to_string(SolverKind s) {
  switch (s) {
  case SolverKind::am: return "am";
  case SolverKind::palm: return "palm";
  case SolverKind::palm_momentum: return "palm_momentum";
  case SolverKind::palm_ut: return "palm_ut";
  case SolverKind::palmnut: return "palmnut";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string &s) {
  for (auto v : {Scenario::denoise, Scenario::recon, Scenario::combine, Scenario::ablation}) {
    if (to_string(v) == s) {
      return v;
    }
  }
  throw ConfigError("unknown scenario '" + s + "'");
}

inline SolverKind parse_solver(const std::string &s) {
  for (auto v : {SolverKind::am, SolverKind::palm, SolverKind::palm_momentum,
                 SolverKind::palm_ut, SolverKind::palmnut}) {
    if (to_string(v) == s) {
      return v;
    }
  }
  throw ConfigError("unknown solver '" + s + "'");
}

// Defaults picked by tools/sweep_lambdas.py (final NRMSE after 1000 PALMNUT
// iterations, 64x64, seed 1).
struct ScenarioDefaults {
  double lambda1;
  double lambda2;
  double xi;
  double sigma; // < 0: calibrate to input NRMSE of 0.15
};

inline ScenarioDefaults scenario_defaults(Scenario s) {
  switch (s) {
  case Scenario::recon:
    return {1e-3, 3e-3, 1e-3, 5e-3};
  case Scenario::combine:
    return {1e-1, 3e-1, 1e-2, -1.0};
  case Scenario::denoise:
  case Scenario::ablation:
    break;
  }
  return {3e-2, 3e-1, 1e-2, -1.0};
}

inline constexpr double kTargetInputNrmse = 0.15;

struct ExperimentConfig {
  Scenario scenario = Scenario::denoise;
  SolverKind solver = SolverKind::palmnut;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::optional<double> xi;
  std::size_t size = 64;
  double accel = 4.0;
  double center_frac = 0.08;
  std::optional<double> sigma;
  std::uint64_t seed = 1;
  int max_iter = 1000;
  std::string output_dir;

  std::size_t coils = 8;
  std::size_t repetitions = 4;
  int wavelet_levels = 3;
  int inner_iter = 10;
  int phase_steps_per_outer = 1;
  double rel_cost_tol = 0.0;
  std::optional<double> time_limit_s;
  bool timing = true;      // false: blank seconds column
  bool init_at_truth = false;
  bool identical_phases = false; // combine only

  double lambda1_value() const { return lambda1.value_or(scenario_defaults(scenario).lambda1); }
  double lambda2_value() const { return lambda2.value_or(scenario_defaults(scenario).lambda2); }
  double xi_value() const { return xi.value_or(scenario_defaults(scenario).xi); }

  void validate() const {
    auto pow2 = [](std::size_t n) { return n >= 8 && (n & (n - 1)) == 0; };
    if (!pow2(size)) {
      throw ConfigError("size must be a power of two >= 8");
    }
    if (!(lambda1_value() > 0.0) || !(lambda2_value() > 0.0)) {
      throw ConfigError("lambda1 and lambda2 must be positive");
    }
    if (!(xi_value() > 0.0)) {
      throw ConfigError("xi must be positive");
    }
    if (sigma && !(*sigma >= 0.0)) {
      throw ConfigError("sigma must be >= 0");
    }
    if (max_iter < 0) {
      throw ConfigError("max_iter must be >= 0");
    }
    if (scenario == Scenario::recon) {
      if (!(accel >= 1.0)) {
        throw ConfigError("accel must be >= 1");
      }
      if (coils < 1) {
        throw ConfigError("coils must be >= 1");
      }
      if (wavelet_levels < 1 || (size >> wavelet_levels) < 4) {
        throw ConfigError("wavelet_levels incompatible with size");
      }
    }
    if (scenario == Scenario::combine && repetitions < 1) {
      throw ConfigError("repetitions must be >= 1");
    }
    if (time_limit_s && !(*time_limit_s > 0.0)) {
      throw ConfigError("time limit must be positive");
    }
    solver_config({}).validate();
  }

  SolverConfig solver_config(TraceMetric metric) const {
    SolverConfig c;
    c.max_outer_iter = max_iter;
    c.rel_cost_tol = rel_cost_tol;
    c.inner_iter = inner_iter;
    c.phase_steps_per_outer = phase_steps_per_outer;
    c.wall_clock_limit_s = time_limit_s;
    c.record_nrmse = static_cast<bool>(metric);
    c.metric = std::move(metric);
    return c;
  }
};

/// Single-image instance (denoise, recon, ablation).
struct SingleInstance {
  Phantom phantom;
  ComplexVector truth;
  ComplexVector initial_image; // noisy image or zero-filled combination
  MagPhaseProblem problem;
  SolverState init;
  double sigma;
  double input_nrmse;

  TraceMetric metric() const {
    return [this](const RealVector &m, const ComplexVector &q) {
      return nrmse(hadamard(m, q), truth, phantom.background_mask);
    };
  }
};

/// Shared-magnitude multi-repetition instance.
struct CombineInstance {
  Phantom phantom;
  std::vector<RealVector> phases;
  std::vector<ComplexVector> noisy;
  MultiRepProblem problem;
  SolverState init;
  double sigma;
  double input_nrmse; // magnitude NRMSE of the first noisy repetition

  TraceMetric metric() const {
    return [this](const RealVector &m, const ComplexVector &) {
      return nrmse(m, phantom.magnitude, phantom.background_mask);
    };
  }
};

namespace detail {

inline std::vector<OperatorPtr> gradient_pair(std::size_t w, std::size_t h) {
  return {make_finite_difference(w, h, DifferenceAxes::horizontal),
          make_finite_difference(w, h, DifferenceAxes::vertical)};
}

inline SolverState state_from_image(const ComplexVector &f) {
  return SolverState::initial(abs(f), prox_unit_modulus(f));
}

inline double resolve_sigma(const ExperimentConfig &cfg, const ComplexVector &truth,
                            const std::vector<bool> &mask) {
  if (cfg.sigma) {
    return *cfg.sigma;
  }
  const double d = scenario_defaults(cfg.scenario).sigma;
  return d >= 0.0 ? d : sigma_for_nrmse(truth, mask, kTargetInputNrmse);
}

} // namespace detail

/// Huber-TV magnitude, Tikhonov finite-difference phase, identity forward model.
inline SingleInstance make_denoise_instance(const ExperimentConfig &cfg) {
  const std::size_t w = cfg.size, h = cfg.size;
  Phantom ph = make_phantom(w, h);
  ComplexVector truth = ph.image();
  const double sigma = detail::resolve_sigma(cfg, truth, ph.background_mask);
  ComplexVector noisy = add_noise(truth, sigma, cfg.seed);
  HuberStackReg r1(cfg.lambda1_value(), cfg.xi_value(), detail::gradient_pair(w, h));
  TikhonovReg r2(cfg.lambda2_value(), make_finite_difference(w, h));
  MagPhaseProblem prob(make_identity(w * h), noisy, r1, r2);
  SolverState init = cfg.init_at_truth
                         ? SolverState::initial(ph.magnitude, exp_i(ph.phase))
                         : detail::state_from_image(noisy);
  const double in_nrmse = nrmse(noisy, truth, ph.background_mask);
  return {std::move(ph), std::move(truth), std::move(noisy), std::move(prob),
          std::move(init), sigma, in_nrmse};
}

/// SENSE forward model, l1-wavelet magnitude, Huber-wavelet phase.
inline SingleInstance make_recon_instance(const ExperimentConfig &cfg) {
  const std::size_t w = cfg.size, h = cfg.size;
  Phantom ph = make_phantom(w, h);
  ComplexVector truth = ph.image();
  auto maps = make_sensitivities(w, h, cfg.coils, cfg.seed);
  const auto mask = make_mask(w, h, cfg.accel, cfg.center_frac, cfg.seed + 1);
  auto a_op = make_sense(w, h, maps, mask);
  const double sigma = detail::resolve_sigma(cfg, truth, ph.background_mask);
  ComplexVector b = add_noise(a_op->apply(truth), sigma, cfg.seed + 2);

  // Zero-filled coil images combined with the coil maps.
  ComplexVector f0 = a_op->adjoint_apply(b);
  const RealVector sos = sum_of_squares(maps);
  for (std::size_t n = 0; n < f0.size(); ++n) {
    f0.set(n, f0[n] / std::max(sos[n] * sos[n], 1e-6));
  }

  auto wavelet = make_daubechies4(w, h, cfg.wavelet_levels);
  L1UnitaryReg r1(cfg.lambda1_value(), wavelet);
  HuberStackReg r2(cfg.lambda2_value(), cfg.xi_value(), {wavelet});
  MagPhaseProblem prob(a_op, std::move(b), r1, r2);
  SolverState init = cfg.init_at_truth
                         ? SolverState::initial(ph.magnitude, exp_i(ph.phase))
                         : detail::state_from_image(f0);
  const double in_nrmse = nrmse(f0, truth, ph.background_mask);
  return {std::move(ph), std::move(truth), std::move(f0), std::move(prob),
          std::move(init), sigma, in_nrmse};
}

/// J noisy repetitions sharing one magnitude, each with its own smooth phase.
inline CombineInstance make_combine_instance(const ExperimentConfig &cfg) {
  const std::size_t h = cfg.size, w = 2 * cfg.size;
  Phantom ph = make_phantom(w, h);
  std::vector<RealVector> phases;
  std::vector<ComplexVector> noisy;
  double sigma = 0.0;
  for (std::size_t j = 0; j < cfg.repetitions; ++j) {
    phases.push_back(cfg.identical_phases ? ph.phase : make_smooth_phase(w, h, cfg.seed + 100 + j));
    const ComplexVector fj = hadamard(ph.magnitude, exp_i(phases.back()));
    if (j == 0) {
      sigma = detail::resolve_sigma(cfg, fj, ph.background_mask);
    }
    noisy.push_back(add_noise(fj, sigma, cfg.seed + j));
  }
  HuberStackReg r1(cfg.lambda1_value(), cfg.xi_value(), detail::gradient_pair(w, h));
  TikhonovReg r2(cfg.lambda2_value(), make_finite_difference(w, h));
  MultiRepProblem prob(noisy, r1, r2);

  RealVector m0(w * h);
  std::vector<ComplexVector> q0;
  for (std::size_t j = 0; j < noisy.size(); ++j) {
    m0 = m0 + abs(noisy[j]);
    q0.push_back(cfg.init_at_truth ? exp_i(phases[j]) : prox_unit_modulus(noisy[j]));
  }
  m0 = (1.0 / static_cast<double>(noisy.size())) * m0;
  if (cfg.init_at_truth) {
    m0 = ph.magnitude;
  }
  const double in_nrmse =
      nrmse(abs(noisy.front()), ph.magnitude, ph.background_mask);
  SolverState init = SolverState::initial(std::move(m0), concat(q0));
  return {std::move(ph), std::move(phases), std::move(noisy), std::move(prob),
          std::move(init), sigma, in_nrmse};
}

template <MagPhaseModel P>
SolverResult run_solver(SolverKind kind, const P &prob, const SolverState &init,
                        const SolverConfig &cfg) {
  switch (kind) {
  case SolverKind::am:
    return run_am_ncg(prob, init, cfg);
  case SolverKind::palm:
    return run_palm_family(prob, init, cfg, palm_variant());
  case SolverKind::palm_momentum:
    return run_palm_family(prob, init, cfg, palm_momentum_variant());
  case SolverKind::palm_ut:
    return run_palm_family(prob, init, cfg, palm_ut_variant());
  case SolverKind::palmnut:
    return run_palm_family(prob, init, cfg, palmnut_variant());
  }
  throw ConfigError("unknown solver");
}

struct ExperimentReport {
  double input_nrmse = 0.0;
  double final_nrmse = 0.0;
  double final_objective = 0.0;
  double sigma = 0.0;
  int iterations = 0;
  SolverResult result; // single-run scenarios
  std::vector<std::pair<SolverKind, SolverTrace>> variants; // ablation
};

namespace detail {

inline std::filesystem::path prepare_output(const ExperimentConfig &cfg) {
  std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  return dir;
}

inline void write_summary(const std::filesystem::path &dir, const ExperimentConfig &cfg,
                          const ExperimentReport &rep) {
  nlohmann::ordered_json j;
  j["scenario"] = to_string(cfg.scenario);
  j["solver"] = to_string(cfg.solver);
  j["lambda1"] = cfg.lambda1_value();
  j["lambda2"] = cfg.lambda2_value();
  j["xi"] = cfg.xi_value();
  j["sigma"] = rep.sigma;
  j["seed"] = cfg.seed;
  j["iterations"] = rep.iterations;
  j["input_nrmse"] = rep.input_nrmse;
  j["final_nrmse"] = rep.final_nrmse;
  j["final_objective"] = rep.final_objective;
  detail::write_bytes(dir / "summary.json", j.dump(2) + "\n");
}

inline void write_single_artifacts(const std::filesystem::path &dir, const SingleInstance &inst,
                                   const SolverState &s) {
  const std::size_t w = inst.phantom.width, h = inst.phantom.height;
  write_vector(dir / "truth.cvec", inst.truth, w, h);
  write_vector(dir / "init.cvec", inst.initial_image, w, h);
  write_vector(dir / "result_m.rvec", s.m_hat, w, h);
  write_vector(dir / "result_q.cvec", s.q_hat, w, h);
  write_vector(dir / "result.cvec", hadamard(s.m_hat, s.q_hat), w, h);
  export_pgm(inst.phantom.magnitude, w, h, dir / "truth_magnitude.pgm");
  export_pgm(inst.phantom.phase, w, h, dir / "truth_phase.pgm");
  export_pgm(abs(inst.initial_image), w, h, dir / "init_magnitude.pgm");
  export_pgm(s.m_hat, w, h, dir / "result_magnitude.pgm");
  export_pgm(angle(s.q_hat), w, h, dir / "result_phase.pgm");
}

inline ExperimentReport run_single(const ExperimentConfig &cfg, const SingleInstance &inst) {
  ExperimentReport rep;
  rep.sigma = inst.sigma;
  rep.input_nrmse = inst.input_nrmse;
  rep.result = run_solver(cfg.solver, inst.problem, inst.init, cfg.solver_config(inst.metric()));
  const auto &s = rep.result.state;
  rep.final_nrmse = nrmse(hadamard(s.m_hat, s.q_hat), inst.truth, inst.phantom.background_mask);
  rep.final_objective = rep.result.trace.final_objective();
  rep.iterations = s.k;
  if (!cfg.output_dir.empty()) {
    const auto dir = prepare_output(cfg);
    write_trace_csv(dir / "trace.csv", rep.result.trace, cfg.timing);
    write_single_artifacts(dir, inst, s);
    write_summary(dir, cfg, rep);
  }
  return rep;
}

} // namespace detail

inline ExperimentReport cmd_denoise(const ExperimentConfig &cfg) {
  cfg.validate();
  const SingleInstance inst = make_denoise_instance(cfg);
  return detail::run_single(cfg, inst);
}

inline ExperimentReport cmd_recon(const ExperimentConfig &cfg) {
  cfg.validate();
  const SingleInstance inst = make_recon_instance(cfg);
  return detail::run_single(cfg, inst);
}

inline ExperimentReport cmd_combine(const ExperimentConfig &cfg) {
  cfg.validate();
  const CombineInstance inst = make_combine_instance(cfg);
  ExperimentReport rep;
  rep.sigma = inst.sigma;
  rep.input_nrmse = inst.input_nrmse;
  rep.result = run_solver(cfg.solver, inst.problem, inst.init, cfg.solver_config(inst.metric()));
  const auto &s = rep.result.state;
  rep.final_nrmse = nrmse(s.m_hat, inst.phantom.magnitude, inst.phantom.background_mask);
  rep.final_objective = rep.result.trace.final_objective();
  rep.iterations = s.k;
  if (!cfg.output_dir.empty()) {
    const auto dir = detail::prepare_output(cfg);
    const std::size_t w = inst.phantom.width, h = inst.phantom.height;
    write_trace_csv(dir / "trace.csv", rep.result.trace, cfg.timing);
    write_vector(dir / "result_m.rvec", s.m_hat, w, h);
    export_pgm(inst.phantom.magnitude, w, h, dir / "truth_magnitude.pgm");
    export_pgm(inst.init.m_hat, w, h, dir / "init_magnitude.pgm");
    export_pgm(s.m_hat, w, h, dir / "result_magnitude.pgm");
    for (std::size_t j = 0; j < inst.noisy.size(); ++j) {
      const std::string tag = std::to_string(j);
      const ComplexVector qj = inst.problem.phase_block(s.q_hat, j);
      write_vector(dir / ("noisy_" + tag + ".cvec"), inst.noisy[j], w, h);
      write_vector(dir / ("result_q_" + tag + ".cvec"), qj, w, h);
      export_pgm(inst.phases[j], w, h, dir / ("truth_phase_" + tag + ".pgm"));
      export_pgm(angle(qj), w, h, dir / ("result_phase_" + tag + ".pgm"));
    }
    detail::write_summary(dir, cfg, rep);
  }
  return rep;
}

inline const std::vector<SolverKind> &ablation_variants() {
  static const std::vector<SolverKind> v{SolverKind::palm, SolverKind::palm_momentum,
                                         SolverKind::palm_ut, SolverKind::palmnut};
  return v;
}

/// All four PALM variants on one seeded denoise instance, run sequentially.
inline ExperimentReport cmd_ablation(const ExperimentConfig &cfg) {
  cfg.validate();
  const SingleInstance inst = make_denoise_instance(cfg);
  ExperimentReport rep;
  rep.sigma = inst.sigma;
  rep.input_nrmse = inst.input_nrmse;
  std::string csv;
  for (SolverKind kind : ablation_variants()) {
    SolverResult r = run_solver(kind, inst.problem, inst.init, cfg.solver_config(inst.metric()));
    std::string part = trace_csv(r.trace, cfg.timing, to_string(kind));
    csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
    if (kind == SolverKind::palmnut) {
      const auto &s = r.state;
      rep.final_nrmse = nrmse(hadamard(s.m_hat, s.q_hat), inst.truth, inst.phantom.background_mask);
      rep.final_objective = r.trace.final_objective();
      rep.iterations = s.k;
    }
    rep.variants.emplace_back(kind, std::move(r.trace));
  }
  if (!cfg.output_dir.empty()) {
    const auto dir = detail::prepare_output(cfg);
    detail::write_bytes(dir / "trace.csv", csv);
    detail::write_summary(dir, cfg, rep);
  }
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig &cfg) {
  switch (cfg.scenario) {
  case Scenario::denoise: return cmd_denoise(cfg);
  case Scenario::recon: return cmd_recon(cfg);
  case Scenario::combine: return cmd_combine(cfg);
  case Scenario::ablation: return cmd_ablation(cfg);
  }
  throw ConfigError("unknown scenario");
}

/// First iteration whose objective is within rel_gap * |best| of the best
/// value seen in any of the given traces.
inline int iterations_to_within(const SolverTrace &trace, double best, double rel_gap) {
  const double target = best + rel_gap * std::abs(best);
  for (const auto &r : trace.records) {
    if (r.objective <= target) {
      return r.k;
    }
  }
  return -1;
}

} // namespace palmnut
