"""How the soft solution approaches the hard one as alpha grows.

Draws one feasible MPC instance and prints, for a sweep of alpha, the
distance to the hard solution, the largest slack and the iteration count.
"""

import argparse

import numpy as np

from slackadmm import mpc
from slackadmm.problem import SoftQpProblem
from slackadmm.solver import SolverSettings, solve_hard, solve_soft_smoothed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=4)
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, default=1e-6)
    args = ap.parse_args()

    inst = mpc.generate(args.nx, args.nx // 2, args.horizon, 1.0, "feasible", args.seed)
    base = mpc.assemble(inst).base
    settings = SolverSettings(eps=args.eps, max_iter=100000)
    hard = solve_hard(base, settings)
    print(f"hard: {hard.status}, {hard.iterations} iterations, objective {hard.objective:.6g}")
    print(f"{'alpha':>8} {'|x - x_hard|':>13} {'max |xi|':>10} {'iters':>6}")
    for alpha in 10.0 ** np.arange(-1, 9):
        rep = solve_soft_smoothed(SoftQpProblem(base, alpha), settings)
        print(f"{alpha:>8.0e} {np.max(np.abs(rep.x - hard.x)):>13.3e} {np.max(np.abs(rep.xi)):>10.3e} "
              f"{rep.iterations:>6}")


if __name__ == "__main__":
    main()
