"""ADMM for box-constrained QPs, with and without slack variables.

Three schemes share one iteration loop and differ only in the problem they
iterate on and in the z-update:

* ``solve_hard``            -- hard QP, clamp projection.
* ``solve_soft_augmented``  -- soft QP rewritten over ``(x, xi)``; hard loop
  on the larger problem.
* ``solve_soft_smoothed``   -- soft QP solved on the original ``n x n``
  system; the z-update blends ``Ax + mu/rho`` with its clamp using weight
  ``alpha / (alpha + rho)``.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import NotPositiveDefinite, SpdFactorization, factorize_spd, gram_plus, solve_with
from .problem import QpProblem, SoftQpProblem, augment, objective_soft, recover_slack

RATIO_FLOOR = 1e-12


class Status(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"

    def __str__(self):
        return self.value


class Method(enum.Enum):
    HARD = "hard"
    SOFT_AUGMENTED = "soft-augmented"
    SOFT_SMOOTHED = "soft-smoothed"

    def __str__(self):
        return self.value


class AssumptionError(ValueError):
    """The x-update matrix could not be factorized."""


@dataclass
class SolverSettings:
    rho0: float = 0.1
    eps: float = 1e-6
    kappa: float = 5.0
    n_rho: int = 25
    max_iter: int = 20000
    rho_min: float = 1e-6
    rho_max: float = 1e6
    adaptive_rho: bool = True
    log_iterates: bool = False

    def __post_init__(self):
        if not (0 < self.rho_min <= self.rho0 <= self.rho_max):
            raise ValueError("need 0 < rho_min <= rho0 <= rho_max")
        if not self.kappa > 1:
            raise ValueError("kappa must exceed 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.n_rho < 1 or self.max_iter < 1:
            raise ValueError("n_rho and max_iter must be positive")


@dataclass
class ResidualPair:
    r_prim: np.ndarray
    r_dual: np.ndarray
    prim_norm: float
    dual_norm: float

    @property
    def worst(self) -> float:
        return max(self.prim_norm, self.dual_norm)


@dataclass
class SolverState:
    x: np.ndarray
    z: np.ndarray
    mu: np.ndarray
    rho: float
    factorization: SpdFactorization
    iter: int = 0


@dataclass
class SolveReport:
    x: np.ndarray
    xi: Optional[np.ndarray]
    z: np.ndarray
    mu: np.ndarray
    objective: float
    residuals: ResidualPair
    iterations: int
    status: Status
    wall_time: float
    rho: float
    iterate_log: Optional[list] = field(default=None, repr=False)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


# ---------------------------------------------------------------------------
# single steps


def x_update(state: SolverState, prob: QpProblem) -> np.ndarray:
    rhs = -prob.q - prob.A.T @ (state.mu - state.rho * state.z)
    return solve_with(state.factorization, rhs)


def project_hard(ztilde: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.minimum(np.maximum(ztilde, lower), upper)


def project_smoothed(ztilde, lower, upper, rho: float, alpha: float) -> np.ndarray:
    """Move out-of-box entries toward the violated bound by ``alpha/(rho+alpha)``.

    Entries inside ``[lower, upper]`` (bounds included) are returned unchanged.
    """
    ztilde = np.asarray(ztilde, dtype=float)
    z = ztilde.copy()
    below = ztilde < lower
    above = ztilde > upper
    lo = np.broadcast_to(lower, ztilde.shape)[below]
    hi = np.broadcast_to(upper, ztilde.shape)[above]
    z[below] = (rho * ztilde[below] + alpha * lo) / (rho + alpha)
    z[above] = (rho * ztilde[above] + alpha * hi) / (rho + alpha)
    return z


def dual_update(mu: np.ndarray, Ax: np.ndarray, z: np.ndarray, rho: float) -> np.ndarray:
    return mu + rho * (Ax - z)


def residuals(prob: QpProblem, x: np.ndarray, z: np.ndarray, mu: np.ndarray, Ax=None) -> ResidualPair:
    if Ax is None:
        Ax = prob.A @ x
    r_prim = Ax - z
    r_dual = prob.Q @ x + prob.q + prob.A.T @ mu
    return ResidualPair(r_prim, r_dual, _inf_norm(r_prim), _inf_norm(r_dual))


def _inf_norm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def update_rho(rho: float, res: ResidualPair, settings: SolverSettings) -> float:
    """Residual-balancing step: rescale rho by sqrt(prim/dual) when unbalanced."""
    ratio = math.sqrt(max(res.prim_norm, RATIO_FLOOR) / max(res.dual_norm, RATIO_FLOOR))
    if ratio > settings.kappa or 1.0 / ratio > settings.kappa:
        return min(max(rho * ratio, settings.rho_min), settings.rho_max)
    return rho


# ---------------------------------------------------------------------------
# the loop

Projection = Callable[[np.ndarray, float], np.ndarray]


class AdmmEngine:
    """Iterates x-update, z-update and dual update on a hard-form QP.

    ``project(ztilde, rho)`` is the z-update. Initial iterates default to
    zero; passing them explicitly is meant for tests and reference runs.
    """

    def __init__(self, prob: QpProblem, settings: SolverSettings, project: Projection,
                 x0=None, z0=None, mu0=None):
        self.prob = prob
        self.settings = settings
        self.project = project
        n, p = prob.n, prob.p
        x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
        z = np.zeros(p) if z0 is None else np.array(z0, dtype=float)
        mu = np.zeros(p) if mu0 is None else np.array(mu0, dtype=float)
        rho = settings.rho0
        self.state = SolverState(x, z, mu, rho, self._factorize(rho))
        self.res: Optional[ResidualPair] = None
        # (x, mu, rho) seen by the most recent z-update
        self.last_zupdate = (x, mu, rho)
        self.log = [] if settings.log_iterates else None

    def _factorize(self, rho: float) -> SpdFactorization:
        return factorize_spd(gram_plus(self.prob.Q, self.prob.A, rho))

    def step(self) -> ResidualPair:
        s, prob = self.state, self.prob
        x = x_update(s, prob)
        Ax = prob.A @ x
        self.last_zupdate = (x, s.mu, s.rho)
        z = self.project(Ax + s.mu / s.rho, s.rho)
        mu = dual_update(s.mu, Ax, z, s.rho)
        s.x, s.z, s.mu = x, z, mu
        s.iter += 1
        self.res = residuals(prob, x, z, mu, Ax)
        if self.log is not None:
            self.log.append((s.iter, self.res.prim_norm, self.res.dual_norm, s.rho))
        return self.res

    def maybe_update_rho(self) -> bool:
        s, cfg = self.state, self.settings
        if not cfg.adaptive_rho or s.iter % cfg.n_rho != 0:
            return False
        rho = update_rho(s.rho, self.res, cfg)
        if rho == s.rho:
            return False
        s.rho = rho
        s.factorization = self._factorize(rho)
        return True

    def run(self) -> Status:
        eps = self.settings.eps
        while self.state.iter < self.settings.max_iter:
            if self.step().worst < eps:
                return Status.CONVERGED
            self.maybe_update_rho()
        return Status.MAX_ITERATIONS


def _engine(prob, settings, project, remedy):
    try:
        return AdmmEngine(prob, settings, project)
    except NotPositiveDefinite as err:
        raise AssumptionError(
            f"x-update matrix Q + rho*A'A is not positive definite (pivot {err.pivot}); {remedy}"
        ) from err


_REGULARIZE_HINT = "append free identity rows with problem.regularize"


def solve_hard(prob: QpProblem, settings: SolverSettings | None = None) -> SolveReport:
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    eng = _engine(prob, settings, lambda zt, rho: project_hard(zt, prob.lower, prob.upper), _REGULARIZE_HINT)
    status = eng.run()
    elapsed = time.perf_counter() - t0
    s = eng.state
    return SolveReport(s.x, None, s.z, s.mu, prob.objective(s.x), eng.res, s.iter, status,
                       elapsed, s.rho, eng.log)


def solve_soft_augmented(prob: SoftQpProblem, settings: SolverSettings | None = None) -> SolveReport:
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    aug = augment(prob)
    eng = _engine(aug, settings, lambda zt, rho: project_hard(zt, aug.lower, aug.upper),
                  f"the augmented matrix needs a larger alpha (alpha={prob.alpha:g})")
    status = eng.run()
    elapsed = time.perf_counter() - t0
    s = eng.state
    x, xi = aug.split(s.x)
    return SolveReport(x, xi, s.z, s.mu, objective_soft(x, xi, prob), eng.res, s.iter, status,
                       elapsed, s.rho, eng.log)


def solve_soft_smoothed(prob: SoftQpProblem, settings: SolverSettings | None = None) -> SolveReport:
    """ADMMSlack: soft QP with the slack eliminated from the linear system."""
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    base, alpha = prob.base, prob.alpha
    eng = _engine(base, settings,
                  lambda zt, rho: project_smoothed(zt, base.lower, base.upper, rho, alpha),
                  _REGULARIZE_HINT)
    status = eng.run()
    x_z, mu_z, rho_z = eng.last_zupdate
    xi = recover_slack(x_z, mu_z, rho_z, prob)
    elapsed = time.perf_counter() - t0
    s = eng.state
    return SolveReport(s.x, xi, s.z, s.mu, objective_soft(s.x, xi, prob), eng.res, s.iter, status,
                       elapsed, s.rho, eng.log)


def solve(prob, method: Method | str, settings: SolverSettings | None = None) -> SolveReport:
    method = Method(method)
    if method is Method.HARD:
        base = prob.base if isinstance(prob, SoftQpProblem) else prob
        return solve_hard(base, settings)
    if not isinstance(prob, SoftQpProblem):
        raise TypeError(f"{method} needs a soft problem (alpha)")
    if method is Method.SOFT_AUGMENTED:
        return solve_soft_augmented(prob, settings)
    return solve_soft_smoothed(prob, settings)
