"""Command-line entry point: ``slackadmm {solve,gen,bench,verify}``.

Exit codes: 0 success, 1 usage or input error, 2 solver did not converge,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import bench, mpc, verify
from .problem import ProblemFormatError, SoftQpProblem, format_problem, read_problem, regularize
from .solver import AssumptionError, Method, SolverSettings, solve

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slackadmm", description="ADMM for QPs with soft constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve a QP from a problem file")
    s.add_argument("file")
    s.add_argument("--method", choices=[m.value for m in Method], default=Method.SOFT_SMOOTHED.value)
    s.add_argument("--alpha", type=_positive_float, help="slack weight (overrides the file)")
    s.add_argument("--eps", type=_positive_float, default=1e-6)
    s.add_argument("--rho0", type=_positive_float, default=0.1)
    s.add_argument("--max-iter", type=_positive_int, default=20000)
    s.add_argument("--regularize", action="store_true", help="append free identity rows first")
    s.add_argument("--solution", action="store_true", help="print x and xi")
    s.add_argument("--log-iterates", metavar="PATH", help="write per-iteration residuals as CSV")

    g = sub.add_parser("gen", help="generate a random MPC problem file")
    g.add_argument("--nx", type=_positive_int, default=4)
    g.add_argument("--nu", type=_positive_int, default=2)
    g.add_argument("--horizon", type=_positive_int, default=20)
    g.add_argument("--alpha", type=_positive_float, default=10.0)
    g.add_argument("--scenario", choices=[s.value for s in mpc.Scenario], default="feasible")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run the residual and/or timing studies")
    b.add_argument("--study", choices=["residuals", "timing", "all"], default="all")
    b.add_argument("--scenario", choices=["feasible", "infeasible", "both"], default="both")
    b.add_argument("--instances", type=int, default=100)
    b.add_argument("--nx", type=int, default=4)
    b.add_argument("--nu", type=int)
    b.add_argument("--horizon", type=_positive_int, default=20)
    b.add_argument("--alpha", type=_positive_float, default=10.0)
    b.add_argument("--eps", type=_positive_float, nargs="+", default=[1e-3, 1e-6])
    b.add_argument("--nx-list", type=int, nargs="+", default=[4, 16])
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--max-iter", type=_positive_int, default=20000)
    b.add_argument("--out-dir", default="bench_out")

    v = sub.add_parser("verify", help="run the oracle cross-check suites")
    v.add_argument("--trials", type=_positive_int, default=100000)
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--inject-failure", action="store_true", help=argparse.SUPPRESS)
    return parser


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def cmd_solve(args) -> int:
    try:
        prob = read_problem(args.file)
    except FileNotFoundError:
        print(f"error: no such file: {args.file}", file=sys.stderr)
        return EXIT_INPUT
    except ProblemFormatError as err:
        print(f"error: {args.file}: {err}", file=sys.stderr)
        return EXIT_INPUT
    method = Method(args.method)
    base = prob.base if isinstance(prob, SoftQpProblem) else prob
    if args.regularize:
        base = regularize(base)
    alpha = args.alpha if args.alpha is not None else getattr(prob, "alpha", None)
    if method is not Method.HARD:
        if alpha is None:
            print(f"error: --method {method} needs alpha (in the file or via --alpha)", file=sys.stderr)
            return EXIT_INPUT
        prob = SoftQpProblem(base, alpha)
    else:
        prob = base
    settings = SolverSettings(rho0=args.rho0, eps=args.eps, max_iter=args.max_iter,
                              log_iterates=bool(args.log_iterates))
    try:
        rep = solve(prob, method, settings)
    except AssumptionError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT

    print(f"method      {method}")
    print(f"status      {rep.status}")
    print(f"iterations  {rep.iterations}")
    print(f"objective   {_fmt(rep.objective)}")
    print(f"prim_norm   {_fmt(rep.residuals.prim_norm)}")
    print(f"dual_norm   {_fmt(rep.residuals.dual_norm)}")
    print(f"rho         {_fmt(rep.rho)}")
    print(f"time        {_fmt(rep.wall_time)} s")
    if args.solution:
        print("x           " + " ".join(_fmt(v) for v in rep.x))
        if rep.xi is not None:
            print("xi          " + " ".join(_fmt(v) for v in rep.xi))
    if args.log_iterates:
        with open(args.log_iterates, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "prim_norm", "dual_norm", "rho"])
            for it, prim, dual, rho in rep.iterate_log:
                w.writerow([it, f"{prim:.17g}", f"{dual:.17g}", f"{rho:.17g}"])
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def cmd_gen(args) -> int:
    inst = mpc.generate(args.nx, args.nu, args.horizon, args.alpha, args.scenario, args.seed)
    text = format_problem(mpc.assemble(inst))
    try:
        with open(args.out, "w") as fh:
            fh.write(text)
    except OSError as err:
        print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {args.out}: n={inst.n} p={inst.p} scenario={inst.scenario} seed={args.seed}")
    return EXIT_OK


def cmd_bench(args) -> int:
    scenarios = ["feasible", "infeasible"] if args.scenario == "both" else [args.scenario]
    try:
        cfg = bench.BenchConfig(scenarios=scenarios, instances=args.instances, nx=args.nx,
                                nu=args.nu, horizon=args.horizon, alpha=args.alpha,
                                eps_list=tuple(args.eps), nx_list=tuple(args.nx_list),
                                base_seed=args.seed, timing_repeats=args.repeats,
                                max_iter=args.max_iter)
    except ValueError as err:
        raise UsageError(str(err)) from err
    solved = attempted = 0
    if args.study in ("residuals", "all"):
        study = bench.run_residual_study(cfg)
        for path in bench.write_residual_study(study, args.out_dir):
            print(f"wrote {path}")
        for (scenario, method), its in sorted(study.iterations.items()):
            print(f"residuals {scenario:<10} {method:<14} median iterations {np.median(its):g}")
        solved += sum(len(v) for v in study.iterations.values())
        attempted += sum(len(v) for v in study.iterations.values()) + len(study.failures)
    if args.study in ("timing", "all"):
        study = bench.run_timing_study(cfg)
        for path in bench.write_timing_study(study, args.out_dir):
            print(f"wrote {path}")
        for row in study.summary:
            print(f"timing {row['scenario']:<10} nx={row['nx']:<3} eps={row['eps']:<6g} "
                  f"median speedup {_fmt(row['median_speedup'])}")
        solved += sum(r["status"] != "Error" for r in study.records)
        attempted += len(study.records)
    return EXIT_OK if solved > 0 or attempted == 0 else EXIT_INPUT


def _plain(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def cmd_verify(args) -> int:
    results = verify.run_all(args.trials, args.seed, inject_failure=args.inject_failure)
    ok = True
    for r in results:
        print(f"{r.name:<22} {r.passed}/{r.total} passed")
        for bad in r.failures[:10]:
            print("  counterexample: " + ", ".join(f"{k}={_plain(v)}" for k, v in bad.items()))
        ok &= r.ok
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"solve": cmd_solve, "gen": cmd_gen, "bench": cmd_bench, "verify": cmd_verify}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
