"""Per-iteration residuals of both soft methods on random MPC instances.

Writes residuals.csv and residuals_aggregate.csv (median and +/- 2 sigma per
iteration) and prints the median iteration count for each scenario.
"""

import argparse

import numpy as np

from slackadmm import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--nx", type=int, default=4)
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--alpha", type=float, default=10.0)
    ap.add_argument("--eps", type=float, default=1e-6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="results/residuals")
    args = ap.parse_args()

    cfg = bench.BenchConfig(instances=args.instances, nx=args.nx, horizon=args.horizon, alpha=args.alpha,
                            eps_list=(args.eps,), base_seed=args.seed)
    study = bench.run_residual_study(cfg)
    for path in bench.write_residual_study(study, args.out_dir):
        print(f"wrote {path}")
    for (scenario, method), its in sorted(study.iterations.items()):
        print(f"{scenario:<10} {method:<14} median iterations {np.median(its):g}  max {max(its)}")
    if study.failures:
        print(f"{len(study.failures)} solves raised errors")


if __name__ == "__main__":
    main()
