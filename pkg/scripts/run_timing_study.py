"""Solve-time comparison of the augmented and smoothed soft methods.

Times are the best of a few repeats per instance, solves run one at a time.
Writes timing.csv and timing_summary.csv and prints the median speedup
time(augmented) / time(smoothed) for every (scenario, nx, eps) cell.
"""

import argparse

from slackadmm import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--nx-list", type=int, nargs="+", default=[4, 16])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-3, 1e-6])
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--alpha", type=float, default=10.0)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="results/timing")
    args = ap.parse_args()

    cfg = bench.BenchConfig(instances=args.instances, nx_list=tuple(args.nx_list), eps_list=tuple(args.eps),
                            horizon=args.horizon, alpha=args.alpha, timing_repeats=args.repeats,
                            base_seed=args.seed)
    study = bench.run_timing_study(cfg)
    for path in bench.write_timing_study(study, args.out_dir):
        print(f"wrote {path}")
    print(f"{'scenario':<10} {'nx':>3} {'eps':>7} {'speedup':>8} {'-2sd':>7} {'+2sd':>7}")
    for row in study.summary:
        print(f"{row['scenario']:<10} {row['nx']:>3} {row['eps']:>7.0e} {row['median_speedup']:>8.2f} "
              f"{row['speedup_p2sigma_low']:>7.2f} {row['speedup_p2sigma_high']:>7.2f}")


if __name__ == "__main__":
    main()
