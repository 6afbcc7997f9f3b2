"""Randomized cross-checks between the solver and the brute-force oracles.

Each suite returns a :class:`SuiteResult`; the CLI ``verify`` command and the
acceptance tests both run them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mpc, oracle
from .problem import QpProblem, SoftQpProblem, recover_slack
from .solver import AdmmEngine, SolverSettings, project_hard, project_smoothed, solve_soft_smoothed

ZXI_RTOL = 1e-9
AVERAGED_RTOL = 1e-14
ITERATE_ATOL = 1e-10
ORACLE_ATOL = 1e-4

# suites that solve whole problems are capped; a trial there is a full instance
ITERATE_TRIALS_CAP = 20
QP_TRIALS_CAP = 50


@dataclass
class SuiteResult:
    name: str
    total: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> int:
        return self.total - len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures


def _magnitude(rng, size=None):
    """Signed values with magnitudes log-uniform in [1e-3, 1e3]."""
    return rng.choice([-1.0, 1.0], size) * 10.0 ** rng.uniform(-3, 3, size)


def random_bounds(rng, size):
    """Bounds mixing l < u, l == u and one-sided infinite rows."""
    lo = _magnitude(rng, size)
    width = 10.0 ** rng.uniform(-3, 3, size)
    hi = lo + width
    kind = rng.integers(0, 5, size)
    hi = np.where(kind == 1, lo, hi)          # equality
    lo = np.where(kind == 2, -np.inf, lo)     # upper bound only
    hi = np.where(kind == 3, np.inf, hi)      # lower bound only
    return lo, hi


def zxi_tuples(rng, count, batch=100):
    """Batches ``(a, mu, rho, alpha, lower, upper)`` sharing ``rho`` and ``alpha``."""
    done = 0
    while done < count:
        m = min(batch, count - done)
        rho = 10.0 ** rng.uniform(-3, 3)
        alpha = 10.0 ** rng.uniform(-3, 3)
        a = _magnitude(rng, m)
        mu = _magnitude(rng, m)
        lo, hi = random_bounds(rng, m)
        # land some points exactly on a bound: mu chosen so that a + mu/rho hits it
        on_edge = rng.random(m) < 0.05
        edge = np.where(np.isfinite(lo), lo, hi)
        mu = np.where(on_edge & np.isfinite(edge), (edge - a) * rho, mu)
        yield a, mu, rho, alpha, lo, hi
        done += m


def check_zxi_projection(trials: int, seed: int, inject_failure: bool = False) -> SuiteResult:
    """Oracle (z, xi) against the smoothed projection and the slack formula."""
    rng = np.random.default_rng(seed)
    out = SuiteResult("zxi-projection")
    for a, mu, rho, alpha, lo, hi in zxi_tuples(rng, trials):
        m = a.size
        z_proj = project_smoothed(a + mu / rho, lo, hi, rho, alpha)
        soft = SoftQpProblem(QpProblem(np.eye(1), np.zeros(1), a[:, None], lo, hi), alpha)
        xi_rec = recover_slack(np.ones(1), mu, rho, soft)
        if inject_failure and out.total == 0:
            z_proj[0] += 1e-3
        for i in range(m):
            sol = oracle.solve_zxi_coordinate(a[i], mu[i], rho, alpha, lo[i], hi[i])
            scale = max(1.0, abs(sol.z), abs(sol.xi))
            if abs(sol.z - z_proj[i]) > ZXI_RTOL * scale or abs(sol.xi - xi_rec[i]) > ZXI_RTOL * scale:
                out.failures.append(dict(a=a[i], mu=mu[i], rho=rho, alpha=alpha, l=lo[i], u=hi[i],
                                         z_oracle=sol.z, z_proj=z_proj[i],
                                         xi_oracle=sol.xi, xi_recovered=xi_rec[i]))
        out.total += m
    return out


def check_averaged_projection(trials: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    out = SuiteResult("averaged-projection")
    lo, hi = random_bounds(rng, trials)
    zt = _magnitude(rng, trials)
    edge = rng.random(trials) < 0.1
    zt = np.where(edge & np.isfinite(lo), lo, zt)
    zt = np.where(edge & ~np.isfinite(lo), hi, zt)
    rho = 10.0 ** rng.uniform(-3, 3, trials)
    alpha = 10.0 ** rng.uniform(-3, 3, trials)
    gamma = alpha / (alpha + rho)
    z_s = np.array([project_smoothed(zt[i:i + 1], lo[i:i + 1], hi[i:i + 1], rho[i], alpha[i])[0]
                    for i in range(trials)])
    z_h = project_hard(zt, lo, hi)
    z_avg = (1 - gamma) * zt + gamma * z_h
    scale = np.maximum(1.0, np.maximum(np.abs(zt), np.abs(z_h)))
    for i in np.flatnonzero(np.abs(z_s - z_avg) > AVERAGED_RTOL * scale):
        out.failures.append(dict(ztilde=zt[i], l=lo[i], u=hi[i], rho=rho[i], alpha=alpha[i],
                                 smoothed=z_s[i], averaged=z_avg[i]))
    out.total = trials
    return out


def smoothed_iterates(prob: SoftQpProblem, rho: float, iterations: int):
    """The engine's fixed-rho iterates ``(x, z, mu)`` for the smoothed scheme."""
    settings = SolverSettings(rho0=rho, rho_min=rho, rho_max=rho, adaptive_rho=False,
                              max_iter=iterations)
    base = prob.base
    eng = AdmmEngine(base, settings,
                     lambda zt, r: project_smoothed(zt, base.lower, base.upper, r, prob.alpha))
    for _ in range(iterations):
        eng.step()
        yield eng.state.x, eng.state.z, eng.state.mu


def check_iterate_equivalence(trials: int, seed: int, iterations: int = 50, rho: float = 0.1,
                              nx: int = 4, horizon: int = 5, alpha: float = 10.0) -> SuiteResult:
    out = SuiteResult("fixed-rho-iterates")
    rng = np.random.default_rng(seed)
    scenarios = [mpc.Scenario.FEASIBLE, mpc.Scenario.INFEASIBLE]
    for t in range(min(trials, ITERATE_TRIALS_CAP)):
        inst_seed = int(rng.integers(2**31))
        prob = mpc.assemble(mpc.generate(nx, nx // 2, horizon, alpha, scenarios[t % 2], inst_seed))
        worst = 0.0
        pairs = zip(smoothed_iterates(prob, rho, iterations),
                    oracle.reference_iterates(prob, rho, iterations))
        for k, ((x, z, mu), (xr, zr, mur, _)) in enumerate(pairs, start=1):
            worst = max(worst, np.max(np.abs(x - xr)), np.max(np.abs(z - zr)), np.max(np.abs(mu - mur)))
        if worst > ITERATE_ATOL:
            out.failures.append(dict(seed=inst_seed, scenario=str(scenarios[t % 2]), max_diff=worst))
        out.total += 1
    return out


def random_soft_qp(rng, n_max=4, p_max=5, alpha=None) -> SoftQpProblem:
    """Small soft QP with positive definite cost; bounds may be inconsistent."""
    n = int(rng.integers(1, n_max + 1))
    p = int(rng.integers(1, p_max + 1))
    G = rng.standard_normal((n, n))
    Q = G.T @ G + 0.1 * np.eye(n)
    q = rng.standard_normal(n)
    A = rng.standard_normal((p, n))
    lo = rng.uniform(-2, 1, p)
    hi = lo + rng.uniform(0, 2, p)
    kind = rng.integers(0, 6, p)
    hi = np.where(kind == 1, lo, hi)
    lo = np.where(kind == 2, -np.inf, lo)
    hi = np.where(kind == 3, np.inf, hi)
    if alpha is None:
        alpha = 10.0 ** rng.uniform(-1, 2)
    return SoftQpProblem(QpProblem(Q, q, A, lo, hi), alpha)


def check_soft_oracle(trials: int, seed: int, eps: float = 1e-8) -> SuiteResult:
    """The smoothed scheme against exact active-set solutions of tiny soft QPs."""
    rng = np.random.default_rng(seed)
    out = SuiteResult("soft-qp-oracle")
    settings = SolverSettings(eps=eps, max_iter=200000)
    for _ in range(min(trials, QP_TRIALS_CAP)):
        prob = random_soft_qp(rng)
        x_ref, xi_ref, _ = oracle.solve_soft_qp_reference(prob)
        rep = solve_soft_smoothed(prob, settings)
        dx = float(np.max(np.abs(rep.x - x_ref)))
        dxi = float(np.max(np.abs(rep.xi - xi_ref)))
        if not rep.converged or dx > ORACLE_ATOL or dxi > ORACLE_ATOL:
            out.failures.append(dict(n=prob.n, p=prob.p, alpha=prob.alpha, dx=dx, dxi=dxi,
                                     status=str(rep.status)))
        out.total += 1
    return out


def check_separability(trials: int, seed: int, rows: int = 3) -> SuiteResult:
    """Joint (z, xi) QP over several rows equals the row-by-row oracle."""
    rng = np.random.default_rng(seed)
    out = SuiteResult("zxi-separability")
    for _ in range(min(trials, QP_TRIALS_CAP)):
        rho = 10.0 ** rng.uniform(-2, 2)
        alpha = 10.0 ** rng.uniform(-2, 2)
        a = rng.uniform(-3, 3, rows)
        mu = rng.uniform(-3, 3, rows)
        lo, hi = random_bounds(rng, rows)
        zj, xij = oracle.solve_zxi_joint(a, mu, rho, alpha, lo, hi)
        zc = np.array([oracle.solve_zxi_coordinate(a[i], mu[i], rho, alpha, lo[i], hi[i]).z for i in range(rows)])
        xic = np.array([oracle.solve_zxi_coordinate(a[i], mu[i], rho, alpha, lo[i], hi[i]).xi for i in range(rows)])
        scale = max(1.0, np.max(np.abs(zc)), np.max(np.abs(xic)))
        diff = max(np.max(np.abs(zj - zc)), np.max(np.abs(xij - xic)))
        if diff > 1e-8 * scale:
            out.failures.append(dict(a=a.tolist(), mu=mu.tolist(), rho=rho, alpha=alpha,
                                     l=lo.tolist(), u=hi.tolist(), diff=diff))
        out.total += 1
    return out


def run_all(trials: int, seed: int, inject_failure: bool = False) -> list[SuiteResult]:
    return [
        check_zxi_projection(trials, seed, inject_failure),
        check_averaged_projection(trials, seed + 1),
        check_iterate_equivalence(trials, seed + 2),
        check_separability(trials, seed + 3),
        check_soft_oracle(trials, seed + 4),
    ]
