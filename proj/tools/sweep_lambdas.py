#!/usr/bin/env python3
"""Grid search of (lambda1, lambda2) per scenario by final NRMSE.

Runs the CLI on a logarithmic grid over [1e-4, 1], keeps the pair with the
smallest final NRMSE and writes configs/<scenario>.toml.
"""

import argparse
import itertools
import json
import pathlib
import subprocess
import sys
import tempfile

import numpy as np

SCENARIOS = ("denoise", "recon", "combine")


def run_once(cli, scenario, lam1, lam2, max_iter, seed, workdir):
    out = pathlib.Path(workdir) / f"{scenario}_{lam1:.0e}_{lam2:.0e}"
    cmd = [
        cli, "--scenario", scenario, "--solver", "palmnut",
        "--lambda1", repr(lam1), "--lambda2", repr(lam2),
        "--max-iter", str(max_iter), "--seed", str(seed),
        "--out", str(out), "--no-timing",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        return None
    summary = json.loads((out / "summary.json").read_text())
    return summary["final_nrmse"]


def write_config(path, scenario, lam1, lam2, nrmse, max_iter, seed):
    lines = [
        f"# final NRMSE {nrmse:.6g} (palmnut, {max_iter} iterations, seed {seed})",
        f'scenario = "{scenario}"',
        'solver = "palmnut"',
        f"lambda1 = {lam1:g}",
        f"lambda2 = {lam2:g}",
        f"max-iter = {max_iter}",
        f"seed = {seed}",
    ]
    if scenario == "recon":
        lines.append("accel = 4")
    path.write_text("\n".join(lines) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cli", required=True, help="path to palmnut_cli")
    ap.add_argument("--scenarios", nargs="+", default=list(SCENARIOS))
    ap.add_argument("--points-per-decade", type=int, default=2)
    ap.add_argument("--max-iter", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--configs", default=str(pathlib.Path(__file__).resolve().parent.parent / "configs"))
    args = ap.parse_args()

    grid = np.logspace(-4, 0, 4 * args.points_per_decade + 1)
    configs = pathlib.Path(args.configs)
    configs.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as work:
        for scenario in args.scenarios:
            results = []
            for lam1, lam2 in itertools.product(grid, grid):
                lam1, lam2 = float(f"{lam1:.1g}"), float(f"{lam2:.1g}")
                err = run_once(args.cli, scenario, lam1, lam2, args.max_iter, args.seed, work)
                print(f"{scenario} lambda1={lam1:g} lambda2={lam2:g} nrmse={err}", flush=True)
                if err is not None:
                    results.append((err, lam1, lam2))
            if not results:
                print(f"{scenario}: every run failed", file=sys.stderr)
                return 1
            err, lam1, lam2 = min(results)
            print(f"{scenario}: best lambda1={lam1:g} lambda2={lam2:g} nrmse={err:.6g}", flush=True)
            write_config(configs / f"{scenario}.toml", scenario, lam1, lam2, err,
                         args.max_iter, args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
