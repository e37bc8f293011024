// Denoise the 64x64 phantom with PALMNUT and AM-NCG and print both results.

#include <iostream>

#include "palmnut/palmnut.hpp"

int main() {
  using namespace palmnut;

  ExperimentConfig cfg;
  cfg.scenario = Scenario::denoise;
  cfg.size = 64;
  cfg.max_iter = 300;
  const SingleInstance inst = make_denoise_instance(cfg);
  std::cout << "input NRMSE " << inst.input_nrmse << " (sigma " << inst.sigma << ")\n";

  for (SolverKind kind : {SolverKind::palmnut, SolverKind::am}) {
    ExperimentConfig run = cfg;
    if (kind == SolverKind::am) {
      run.max_iter = 30;
    }
    const SolverResult r =
        run_solver(kind, inst.problem, inst.init, run.solver_config(inst.metric()));
    const auto &s = r.state;
    std::cout << to_string(kind) << ": " << s.k << " iterations, objective "
              << r.trace.final_objective() << ", NRMSE "
              << nrmse(hadamard(s.m_hat, s.q_hat), inst.truth, inst.phantom.background_mask)
              << '\n';
  }
  return 0;
}
