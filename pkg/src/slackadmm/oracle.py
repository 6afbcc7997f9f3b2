"""Brute-force reference solvers.

Nothing here calls into :mod:`slackadmm.solver`; these routines exist to
check it. ``solve_zxi_coordinate`` handles the per-row ``(z, xi)``
subproblem

    minimize    rho/2 z^2 + alpha/2 xi^2 - (rho a + mu) z
    subject to  l <= z + xi <= u

by enumerating which side of the constraint is active and checking each
candidate against the KKT conditions. ``solve_qp_active_set`` does the same
for whole (small) QPs.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .problem import QpProblem, SoftQpProblem, augment

MULTIPLIER_TOL = 1e-10
FEASIBILITY_TOL = 1e-9


class Activity(enum.Enum):
    INACTIVE = "Inactive"
    LOWER = "Lower"
    UPPER = "Upper"
    FREE = "Free"


class Infeasible(ValueError):
    pass


@dataclass(frozen=True)
class ZXiSolution:
    z: float
    xi: float
    active: Activity


def _solve2(a11, a12, a21, a22, b1, b2):
    det = a11 * a22 - a12 * a21
    return (b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det


def solve_zxi_coordinate(a: float, mu_i: float, rho: float, alpha: float,
                         l_i: float, u_i: float) -> ZXiSolution:
    """Solve one row of the ``(z, xi)`` subproblem by KKT case enumeration."""
    c = rho * a + mu_i  # linear coefficient is -c

    if l_i == u_i:
        # equality row: rho z - nu = c, alpha xi - nu = 0, z + xi = h
        z, xi = _solve2(rho, -alpha, 1.0, 1.0, c, l_i)
        if z + xi == l_i and xi == 0.0:
            return ZXiSolution(z, xi, Activity.INACTIVE)
        side = Activity.LOWER if xi > 0 else Activity.UPPER if xi < 0 else Activity.INACTIVE
        return ZXiSolution(z, xi, side)

    # inactive: nu_l = nu_u = 0, so rho z = c and alpha xi = 0
    z = c / rho
    if l_i <= z <= u_i:
        return ZXiSolution(z, 0.0, Activity.INACTIVE)

    candidates = []
    if math.isfinite(l_i):
        # lower active: rho z - nu = c, alpha xi - nu = 0, z + xi = l, nu >= 0
        z, xi = _solve2(rho, -alpha, 1.0, 1.0, c, l_i)
        nu = alpha * xi
        candidates.append((nu, z, xi, Activity.LOWER))
    if math.isfinite(u_i):
        # upper active: rho z + nu = c, alpha xi + nu = 0, z + xi = u, nu >= 0
        z, xi = _solve2(rho, -alpha, 1.0, 1.0, c, u_i)
        nu = -alpha * xi
        candidates.append((nu, z, xi, Activity.UPPER))
    for nu, z, xi, side in candidates:
        if nu >= -MULTIPLIER_TOL * max(1.0, abs(c)):
            return ZXiSolution(z, xi, side)
    # unreachable for l < u: if the inactive point is outside the box one side works
    raise AssertionError(f"no KKT point for {(a, mu_i, rho, alpha, l_i, u_i)}")


@dataclass
class ActiveSetSolution:
    x: np.ndarray
    multipliers: np.ndarray
    active_set: tuple
    objective: float


def _row_options(lo: float, hi: float):
    if lo == hi:
        return (Activity.LOWER,)  # equality: always active, multiplier sign free
    opts = [Activity.FREE]
    if math.isfinite(lo):
        opts.append(Activity.LOWER)
    if math.isfinite(hi):
        opts.append(Activity.UPPER)
    return tuple(opts)


def solve_qp_active_set(prob: QpProblem) -> ActiveSetSolution:
    """Exact solution of a small convex QP by enumerating active sets.

    Multipliers follow the sign convention ``Qx + q + A'lam = 0``: a lower
    bound carries ``lam <= 0``, an upper bound ``lam >= 0``.
    """
    n, p = prob.n, prob.p
    if n > 10 or p > 8:
        raise ValueError(f"active-set enumeration is for desk-size problems (n={n}, p={p})")
    Q, q, A, lo, hi = prob.Q, prob.q, prob.A, prob.lower, prob.upper
    equality = lo == hi
    best = None
    for assignment in itertools.product(*(_row_options(lo[i], hi[i]) for i in range(p))):
        rows = [i for i, act in enumerate(assignment) if act is not Activity.FREE]
        k = len(rows)
        K = np.zeros((n + k, n + k))
        K[:n, :n] = Q
        Aa = A[rows]
        K[:n, n:] = Aa.T
        K[n:, :n] = Aa
        rhs = np.concatenate([-q, [lo[i] if assignment[i] is Activity.LOWER else hi[i] for i in rows]])
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(sol)) or np.max(np.abs(K @ sol - rhs)) > 1e-9 * max(1.0, np.max(np.abs(rhs))):
            continue  # singular in practice
        x, lam_a = sol[:n], sol[n:]
        Ax = A @ x
        scale = 1.0 + np.abs(Ax)
        if np.any(Ax < lo - FEASIBILITY_TOL * scale) or np.any(Ax > hi + FEASIBILITY_TOL * scale):
            continue
        lam = np.zeros(p)
        lam[rows] = lam_a
        ok = True
        for i, li in zip(rows, lam_a):
            if equality[i]:
                continue
            if assignment[i] is Activity.LOWER and li > MULTIPLIER_TOL:
                ok = False
            if assignment[i] is Activity.UPPER and li < -MULTIPLIER_TOL:
                ok = False
        if not ok:
            continue
        obj = prob.objective(x)
        if best is None or obj < best.objective - 1e-12 * max(1.0, abs(best.objective)):
            best = ActiveSetSolution(x, lam, assignment, obj)
    if best is None:
        raise Infeasible("no active set yields a KKT point")
    return best


def solve_soft_qp_reference(prob: SoftQpProblem) -> tuple[np.ndarray, np.ndarray, ActiveSetSolution]:
    """Exact ``(x, xi)`` for a small soft QP via its augmented hard form."""
    aug = augment(prob)
    if aug.n > 10 or aug.p > 8:
        raise ValueError("soft reference needs n + p <= 10 and p <= 8")
    sol = solve_qp_active_set(aug)
    x, xi = aug.split(sol.x)
    return x, xi, sol


def solve_zxi_joint(a: np.ndarray, mu: np.ndarray, rho: float, alpha: float,
                    lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The full multi-row ``(z, xi)`` subproblem handed to the active-set solver."""
    p = len(a)
    Q = np.diag(np.concatenate([np.full(p, rho), np.full(p, alpha)]))
    q = np.concatenate([-(rho * np.asarray(a) + np.asarray(mu)), np.zeros(p)])
    A = np.hstack([np.eye(p), np.eye(p)])
    sol = solve_qp_active_set(QpProblem(Q, q, A, lower, upper))
    return sol.x[:p], sol.x[p:]


def reference_iterates(prob: SoftQpProblem, rho: float, iterations: int):
    """Fixed-rho ADMM on the soft QP with the ``(z, xi)`` step done by :func:`solve_zxi_coordinate`.

    Yields ``(x, z, mu, xi)`` after each iteration starting from zeros. The
    x-update uses a plain LU solve so that no code is shared with the engine.
    """
    base = prob.base
    n, p = base.n, base.p
    M = base.Q + rho * base.A.T @ base.A
    x, z, mu = np.zeros(n), np.zeros(p), np.zeros(p)
    for _ in range(iterations):
        x = np.linalg.solve(M, -base.q - base.A.T @ mu + rho * base.A.T @ z)
        Ax = base.A @ x
        sols = [solve_zxi_coordinate(Ax[i], mu[i], rho, prob.alpha, base.lower[i], base.upper[i])
                for i in range(p)]
        z = np.array([s.z for s in sols])
        xi = np.array([s.xi for s in sols])
        mu = mu + rho * (Ax - z)
        yield x, z, mu, xi
