"""Random linear MPC problems with soft constraints.

Instances are drawn from numpy's PCG64 generator (``numpy.random.default_rng``)
in a fixed order, so a seed fully determines an instance:

1. ``Adyn``: i.i.d. N(0, 1), rescaled to spectral radius 0.99
2. ``Bdyn``: i.i.d. N(0, 1)
3. ``Qcost = diag(d)``, ``d ~ U[0, 10]``; ``Rcost = 0.1 I``
4. state bound ``xbar ~ U[1, 2]``, box ``[-xbar, xbar]``
5. control bound ``ubar ~ U[0.5, 1]``, box ``[-ubar, ubar]``
6. initial state: ``U[-xbar/2, xbar/2]`` (feasible) or ``(1 + w) xbar`` with
   ``w ~ U[0, 1]`` (infeasible)

Random stable-looking dynamics can still be transiently expansive, so a
"feasible" draw is not automatically feasible. For that scenario, steps 1-6
are repeated on the same stream until the hard constraints admit a point
(checked with an LP).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .problem import QpProblem, SoftQpProblem

SPECTRAL_RADIUS = 0.99


class Scenario(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class MpcInstance:
    nx: int
    nu: int
    horizon: int
    Adyn: np.ndarray
    Bdyn: np.ndarray
    Qcost: np.ndarray
    Rcost: np.ndarray
    x_lower: np.ndarray
    x_upper: np.ndarray
    u_lower: np.ndarray
    u_upper: np.ndarray
    x_init: np.ndarray
    alpha: float
    seed: int
    scenario: Scenario = Scenario.FEASIBLE

    @property
    def n(self) -> int:
        return self.nx * (self.horizon + 1) + self.nu * self.horizon

    @property
    def p(self) -> int:
        nx, nu, N = self.nx, self.nu, self.horizon
        return nx * N + nx + nx * (N + 1) + nu * N


def generate(nx: int, nu: int, horizon: int, alpha: float, scenario: Scenario | str,
             seed: int) -> MpcInstance:
    if min(nx, nu, horizon) < 1:
        raise ValueError("nx, nu and horizon must be at least 1")
    scenario = Scenario(scenario)
    rng = np.random.default_rng(seed)
    while True:
        inst = _draw(rng, nx, nu, horizon, alpha, scenario, seed)
        if scenario is Scenario.INFEASIBLE or is_hard_feasible(inst):
            return inst


def _draw(rng, nx, nu, horizon, alpha, scenario, seed) -> MpcInstance:
    Adyn = rng.standard_normal((nx, nx))
    radius = np.max(np.abs(np.linalg.eigvals(Adyn)))
    if radius > 0:
        Adyn *= SPECTRAL_RADIUS / radius
    Bdyn = rng.standard_normal((nx, nu))
    Qcost = np.diag(rng.uniform(0.0, 10.0, nx))
    Rcost = 0.1 * np.eye(nu)
    xbar = rng.uniform(1.0, 2.0, nx)
    ubar = rng.uniform(0.5, 1.0, nu)
    if scenario is Scenario.FEASIBLE:
        x_init = rng.uniform(-0.5 * xbar, 0.5 * xbar)
    else:
        x_init = (1.0 + rng.uniform(0.0, 1.0, nx)) * xbar
    return MpcInstance(nx, nu, horizon, Adyn, Bdyn, Qcost, Rcost, -xbar, xbar, -ubar, ubar,
                       x_init, float(alpha), seed, scenario)


def is_hard_feasible(inst: MpcInstance) -> bool:
    """Whether the MPC constraints hold for some trajectory without slack."""
    N = inst.horizon
    prob = assemble(inst).base
    n_eq = inst.nx * (N + 1)  # dynamics and initial-state rows come first
    bounds = list(zip(np.tile(inst.x_lower, N + 1), np.tile(inst.x_upper, N + 1)))
    bounds += list(zip(np.tile(inst.u_lower, N), np.tile(inst.u_upper, N)))
    res = linprog(np.zeros(prob.n), A_eq=prob.A[:n_eq], b_eq=prob.lower[:n_eq], bounds=bounds,
                  method="highs")
    return res.status == 0


def assemble(inst: MpcInstance) -> SoftQpProblem:
    """Stack the horizon into one soft QP over ``(x_0..x_N, u_0..u_{N-1})``.

    Row blocks, in order: dynamics ``x_{k+1} - A x_k - B u_k = 0`` for
    ``k < N``, initial state ``x_0 = x_s``, state boxes for ``k <= N``,
    control boxes for ``k < N``.
    """
    nx, nu, N = inst.nx, inst.nu, inst.horizon
    n, p = inst.n, inst.p
    nxs = nx * (N + 1)

    def xcol(k):
        return slice(k * nx, (k + 1) * nx)

    def ucol(k):
        return slice(nxs + k * nu, nxs + (k + 1) * nu)

    A = np.zeros((p, n))
    lower = np.empty(p)
    upper = np.empty(p)
    row = 0
    for k in range(N):
        r = slice(row, row + nx)
        A[r, xcol(k + 1)] = np.eye(nx)
        A[r, xcol(k)] = -inst.Adyn
        A[r, ucol(k)] = -inst.Bdyn
        lower[r] = upper[r] = 0.0
        row += nx
    r = slice(row, row + nx)
    A[r, xcol(0)] = np.eye(nx)
    lower[r] = upper[r] = inst.x_init
    row += nx
    for k in range(N + 1):
        r = slice(row, row + nx)
        A[r, xcol(k)] = np.eye(nx)
        lower[r], upper[r] = inst.x_lower, inst.x_upper
        row += nx
    for k in range(N):
        r = slice(row, row + nu)
        A[r, ucol(k)] = np.eye(nu)
        lower[r], upper[r] = inst.u_lower, inst.u_upper
        row += nu
    assert row == p

    Q = scipy.linalg.block_diag(*([inst.Qcost] * (N + 1) + [inst.Rcost] * N))
    return SoftQpProblem(QpProblem(Q, np.zeros(n), A, lower, upper), inst.alpha)
