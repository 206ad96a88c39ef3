#!/usr/bin/env python3
"""Run all four methods on the same problem and print a comparison table.

The problem is the heterogeneous exponential-pair family whose smoothness
modulus grows with the gradient norm, the regime the normalized method is
built for. Step size, batch size, and gossip depth come from the calculator
at the requested accuracy; the baselines reuse the same step size so the
comparison isolates the update rule (dnasa treats it as its eta_max).

Example:
    python scripts/compare_optimizers.py --epsilon 0.2 --seeds 3 --out-dir out/compare
"""

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from dnsgd.config import AutoHyperConfig, ProblemConfig, RunConfig, TopologyConfig
from dnsgd.harness import run_experiment
from dnsgd.optimizers import ALGORITHMS


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=0.2, help="target stationarity")
    ap.add_argument("--sigma", type=float, default=0.1, help="oracle noise level")
    ap.add_argument("--seeds", type=int, default=3, help="independent runs per method")
    ap.add_argument("--t-cap", type=int, default=3000, help="iteration cap")
    ap.add_argument("--seed", type=int, default=2024, help="master seed")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out-dir", default=None, help="write per-method CSVs here")
    args = ap.parse_args()

    base = RunConfig(
        problem=ProblemConfig(
            family="exp_pair", d=10, m=8, zeta=0.2, sigma=args.sigma, seed=1, rate=1.0
        ),
        topology=TopologyConfig(kind="ring"),
        algorithm="dnsgd",
        x0=1.5,
        master_seed=args.seed,
        auto=AutoHyperConfig(epsilon=args.epsilon, t_cap=args.t_cap),
        num_seeds=args.seeds,
        snapshot_every=0,
    )

    print(f"{'method':8s} {'avg ||grad||':>14s} {'min ||grad||':>14s} "
          f"{'cons_x (final)':>15s} {'samples/agent':>14s} {'comm rounds':>12s}")
    for alg in ALGORITHMS:
        cfg = dataclasses.replace(base, algorithm=alg)
        out_dir = None
        if args.out_dir is not None:
            out_dir = Path(args.out_dir) / alg
        result = run_experiment(
            cfg, threads=args.threads, out_dir=out_dir,
            write_outputs=out_dir is not None,
        )
        avg = np.mean([s.avg_grad_mean for s in result.per_seed_stationarity])
        best = np.mean([s.min_grad_mean for s in result.per_seed_stationarity])
        final = np.mean([traj.rows[-1].cons_x for traj in result.trajectories])
        last = result.trajectories[0].rows[-1]
        print(f"{alg:8s} {avg:14.5f} {best:14.5f} {final:15.3e} "
              f"{last.samples_per_agent:14d} {last.comm_rounds:12d}")
    hp = result.hp
    print(f"\ncalculator: eta={hp.eta:.5g} b={hp.b} big_t={hp.big_t} "
          f"k_inner={hp.k_inner} k_init={hp.k_init}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
