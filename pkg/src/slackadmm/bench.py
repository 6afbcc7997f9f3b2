"""Residual and solve-time studies on random MPC instances.

Both studies compare ADMM on the slack-augmented problem against the
smoothed-projection scheme on identical instances. Results are plain row
dicts; the ``write_*`` helpers dump them as CSV with 17 significant digits.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import mpc
from .mpc import Scenario
from .solver import Method, SolverSettings, solve

log = logging.getLogger(__name__)

METHOD_LABELS = {
    Method.SOFT_AUGMENTED: "SoftAugmented",
    Method.SOFT_SMOOTHED: "SoftSmoothed",
    Method.HARD: "Hard",
}

RESIDUAL_FIELDS = ["instance_id", "scenario", "method", "iter", "prim_norm", "dual_norm", "rho"]
AGGREGATE_FIELDS = ["scenario", "method", "iter", "count",
                    "median_prim", "prim_p2sigma_low", "prim_p2sigma_high",
                    "median_dual", "dual_p2sigma_low", "dual_p2sigma_high"]
TIMING_FIELDS = ["instance_id", "scenario", "method", "nx", "eps", "iterations",
                 "wall_time_seconds", "status", "objective"]
SUMMARY_FIELDS = ["scenario", "nx", "eps", "median_speedup", "speedup_p2sigma_low",
                  "speedup_p2sigma_high", "median_time_augmented", "median_time_smoothed"]


@dataclass
class BenchConfig:
    scenarios: Sequence[Scenario] = (Scenario.FEASIBLE, Scenario.INFEASIBLE)
    instances: int = 100
    nx: int = 4
    nu: int | None = None  # defaults to nx // 2
    horizon: int = 20
    alpha: float = 10.0
    eps_list: Sequence[float] = (1e-3, 1e-6)
    nx_list: Sequence[int] = (4, 16)
    base_seed: int = 0
    timing_repeats: int = 3
    max_iter: int = 20000
    # (baseline, candidate); the speedup is time(baseline) / time(candidate)
    methods: tuple = (Method.SOFT_AUGMENTED, Method.SOFT_SMOOTHED)

    def __post_init__(self):
        self.scenarios = tuple(Scenario(s) for s in self.scenarios)
        self.methods = tuple(Method(m) for m in self.methods)
        if self.instances < 1:
            raise ValueError("instances must be at least 1")
        if not self.eps_list:
            raise ValueError("eps_list must not be empty")
        if any(v % 2 for v in self.nx_list):
            raise ValueError("nx_list entries must be even")
        if self.timing_repeats < 1:
            raise ValueError("timing_repeats must be at least 1")

    def controls(self, nx: int) -> int:
        return self.nu if (self.nu is not None and nx == self.nx) else max(nx // 2, 1)

    def instance(self, scenario: Scenario, nx: int, i: int):
        inst = mpc.generate(nx, self.controls(nx), self.horizon, self.alpha, scenario,
                            self.base_seed + i)
        return mpc.assemble(inst)


def spread(values: Iterable[float]) -> tuple[float, float, float]:
    """Median and median -/+ two standard deviations."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        return (np.nan, np.nan, np.nan)
    med, sd = float(np.median(v)), float(np.std(v))
    return med, med - 2 * sd, med + 2 * sd


# ---------------------------------------------------------------------------
# residual study


@dataclass
class ResidualStudy:
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    iterations: dict = field(default_factory=dict)  # (scenario, method) -> [iters per instance]
    failures: list = field(default_factory=list)


def run_residual_study(cfg: BenchConfig) -> ResidualStudy:
    eps = min(cfg.eps_list)
    settings = SolverSettings(eps=eps, max_iter=cfg.max_iter, log_iterates=True)
    out = ResidualStudy()
    for scenario in cfg.scenarios:
        per_method: dict = {m: [] for m in cfg.methods}
        for i in range(cfg.instances):
            prob = cfg.instance(scenario, cfg.nx, i)
            for method in cfg.methods:
                label = METHOD_LABELS[method]
                try:
                    rep = solve(prob, method, settings)
                except Exception as err:  # recorded, not fatal
                    log.warning("instance %d %s %s failed: %s", i, scenario, label, err)
                    out.failures.append((i, str(scenario), label, str(err)))
                    continue
                per_method[method].append(rep.iterate_log)
                out.iterations.setdefault((str(scenario), label), []).append(rep.iterations)
                for it, prim, dual, rho in rep.iterate_log:
                    out.rows.append(dict(instance_id=i, scenario=str(scenario), method=label,
                                         iter=it, prim_norm=prim, dual_norm=dual, rho=rho))
        for method, logs in per_method.items():
            out.aggregates.extend(_aggregate(str(scenario), METHOD_LABELS[method], logs))
    return out


def _aggregate(scenario: str, method: str, logs: list) -> list:
    """Per-iteration statistics over the instances still running at that iteration."""
    rows = []
    longest = max((len(lg) for lg in logs), default=0)
    for k in range(longest):
        prims = [lg[k][1] for lg in logs if len(lg) > k]
        duals = [lg[k][2] for lg in logs if len(lg) > k]
        pm, plo, phi = spread(prims)
        dm, dlo, dhi = spread(duals)
        rows.append(dict(scenario=scenario, method=method, iter=k + 1, count=len(prims),
                         median_prim=pm, prim_p2sigma_low=plo, prim_p2sigma_high=phi,
                         median_dual=dm, dual_p2sigma_low=dlo, dual_p2sigma_high=dhi))
    return rows


# ---------------------------------------------------------------------------
# timing study


@dataclass
class TimingStudy:
    records: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    speedups: dict = field(default_factory=dict)  # (scenario, nx, eps) -> [ratio per instance]


def _best_time(prob, method, settings, repeats):
    best = None
    for _ in range(repeats):
        rep = solve(prob, method, settings)
        if best is None or rep.wall_time < best.wall_time:
            best = rep
    return best


def run_timing_study(cfg: BenchConfig) -> TimingStudy:
    """Time both methods on identical instances; strictly sequential by design."""
    base, cand = cfg.methods
    out = TimingStudy()
    for scenario in cfg.scenarios:
        for eps in cfg.eps_list:
            settings = SolverSettings(eps=eps, max_iter=cfg.max_iter)
            for nx in cfg.nx_list:
                times = ([], [])
                ratios = []
                for i in range(cfg.instances):
                    prob = cfg.instance(scenario, nx, i)
                    reps = []
                    for method in (base, cand):
                        try:
                            rep = _best_time(prob, method, settings, cfg.timing_repeats)
                        except Exception as err:
                            log.warning("instance %d %s failed: %s", i, METHOD_LABELS[method], err)
                            rep = None
                        reps.append(rep)
                        out.records.append(_record(i, scenario, method, nx, eps, rep))
                    if None not in reps:
                        times[0].append(reps[0].wall_time)
                        times[1].append(reps[1].wall_time)
                        ratios.append(reps[0].wall_time / reps[1].wall_time)
                key = (str(scenario), nx, eps)
                out.speedups[key] = ratios
                med, lo, hi = spread(ratios)
                out.summary.append(dict(
                    scenario=str(scenario), nx=nx, eps=eps, median_speedup=med,
                    speedup_p2sigma_low=lo, speedup_p2sigma_high=hi,
                    median_time_augmented=spread(times[0])[0],
                    median_time_smoothed=spread(times[1])[0]))
    return out


def _record(i, scenario, method, nx, eps, rep):
    if rep is None:
        return dict(instance_id=i, scenario=str(scenario), method=METHOD_LABELS[method], nx=nx,
                    eps=eps, iterations=0, wall_time_seconds=np.nan, status="Error",
                    objective=np.nan)
    return dict(instance_id=i, scenario=str(scenario), method=METHOD_LABELS[method], nx=nx,
                eps=eps, iterations=rep.iterations, wall_time_seconds=rep.wall_time,
                status=str(rep.status), objective=rep.objective)


# ---------------------------------------------------------------------------
# CSV output


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def write_csv(rows: list, fields: list, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row[k]) for k in fields})


def write_residual_study(study: ResidualStudy, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "residuals.csv", out_dir / "residuals_aggregate.csv"]
    write_csv(study.rows, RESIDUAL_FIELDS, paths[0])
    write_csv(study.aggregates, AGGREGATE_FIELDS, paths[1])
    return paths


def write_timing_study(study: TimingStudy, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "timing.csv", out_dir / "timing_summary.csv"]
    write_csv(study.records, TIMING_FIELDS, paths[0])
    write_csv(study.summary, SUMMARY_FIELDS, paths[1])
    return paths


def with_overrides(cfg: BenchConfig, **kw) -> BenchConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
