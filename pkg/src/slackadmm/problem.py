"""QP data, soft-constrained QPs, and the slack-augmented reformulation.

A hard QP is::

    minimize    1/2 x'Qx + q'x
    subject to  l <= Ax <= u

and its soft counterpart adds a slack ``xi`` inside the constraints with
cost ``alpha/2 |xi|^2``. Equality rows are encoded as ``l_i == u_i``;
infinite bounds use IEEE infinities.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import NotPositiveDefinite, as_matrix, as_vector, factorize_spd, gram_plus

SYMMETRY_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QpProblem:
    Q: np.ndarray
    q: np.ndarray
    A: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        Q = as_matrix(self.Q, "Q")
        n = Q.shape[0]
        A = np.array(self.A, dtype=float).reshape(-1, n) if np.size(self.A) == 0 else as_matrix(self.A, "A")
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "q", _freeze(as_vector(self.q, "q")))
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "lower", _freeze(as_vector(self.lower, "lower", allow_inf=True)))
        object.__setattr__(self, "upper", _freeze(as_vector(self.upper, "upper", allow_inf=True)))
        p = self.A.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError(f"Q must be square, got {self.Q.shape}")
        if self.q.shape != (n,):
            raise ValueError(f"q has length {self.q.size}, expected {n}")
        if self.A.shape[1] != n:
            raise ValueError(f"A has {self.A.shape[1]} columns, expected {n}")
        if self.lower.shape != (p,) or self.upper.shape != (p,):
            raise ValueError(f"bounds must have length {p}")

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.q @ x)

    def violation(self, Ax: np.ndarray) -> float:
        """Largest bound violation of the constraint values ``Ax``."""
        if Ax.size == 0:
            return 0.0
        return float(max(0.0, np.max(self.lower - Ax), np.max(Ax - self.upper)))


@dataclass(frozen=True, eq=False)
class SoftQpProblem:
    base: QpProblem
    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha}")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def p(self) -> int:
        return self.base.p


@dataclass(frozen=True, eq=False)
class AugmentedProblem(QpProblem):
    """The soft QP written as a hard QP over ``(x, xi)``.

    ``Q = blockdiag(Q, alpha I)``, ``q = [q; 0]`` and ``A = [A  I]``.
    """

    n_base: int = field(default=0)

    @property
    def Qbar(self) -> np.ndarray:
        return self.Q

    @property
    def qbar(self) -> np.ndarray:
        return self.q

    @property
    def Abar(self) -> np.ndarray:
        return self.A

    def split(self, xbar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return xbar[: self.n_base], xbar[self.n_base :]


def validate(prob: QpProblem) -> list[str]:
    """Return every violated invariant; an empty list means the problem is usable."""
    problems = []
    scale = float(np.max(np.abs(prob.Q))) if prob.Q.size else 0.0
    asym = float(np.max(np.abs(prob.Q - prob.Q.T))) if prob.Q.size else 0.0
    if asym > SYMMETRY_TOL * scale:
        problems.append(f"Q is not symmetric (max asymmetry {asym:.3g})")
    for i in np.flatnonzero(prob.lower > prob.upper):
        problems.append(f"lower exceeds upper at row {i}")
    for i in np.flatnonzero(np.isposinf(prob.lower) | np.isneginf(prob.upper)):
        problems.append(f"unsatisfiable infinite bound at row {i}")
    try:
        factorize_spd(gram_plus(prob.Q, prob.A, 1.0))
    except NotPositiveDefinite:
        problems.append("x-update matrix Q+rho*A'A singular (try regularize)")
    return problems


def augment(prob: SoftQpProblem) -> AugmentedProblem:
    n, p = prob.n, prob.p
    base = prob.base
    Qbar = np.zeros((n + p, n + p))
    Qbar[:n, :n] = base.Q
    Qbar[n:, n:] = prob.alpha * np.eye(p)
    qbar = np.concatenate([base.q, np.zeros(p)])
    Abar = np.hstack([base.A, np.eye(p)])
    aug = AugmentedProblem(Qbar, qbar, Abar, base.lower, base.upper, n_base=n)
    assert np.array_equal(aug.Q[:n, :n], base.Q) and np.array_equal(aug.A[:, :n], base.A)
    assert np.array_equal(aug.Q[n:, n:], prob.alpha * np.eye(p))
    assert np.array_equal(aug.A[:, n:], np.eye(p)) and not np.any(aug.Q[:n, n:])
    return aug


def regularize(prob: QpProblem) -> QpProblem:
    """Append one free identity row per variable so that ``A'A`` is invertible.

    The new rows have bounds ``(-inf, inf)`` and therefore never change the
    feasible set or the optimum.
    """
    n = prob.n
    return QpProblem(
        prob.Q,
        prob.q,
        np.vstack([prob.A.reshape(-1, n), np.eye(n)]),
        np.concatenate([prob.lower, np.full(n, -np.inf)]),
        np.concatenate([prob.upper, np.full(n, np.inf)]),
    )


def recover_slack(x: np.ndarray, mu: np.ndarray, rho: float, prob: SoftQpProblem) -> np.ndarray:
    """Slack implied by a smoothed-projection z-update at ``(x, mu, rho)``.

    With ``zt = Ax + mu/rho`` the slack is ``rho/(rho+alpha) * (l - zt)`` below
    the box, ``rho/(rho+alpha) * (u - zt)`` above it, and zero inside.
    """
    base = prob.base
    zt = base.A @ x + mu / rho
    w = rho / (rho + prob.alpha)
    xi = np.zeros_like(zt)
    below = zt < base.lower
    above = zt > base.upper
    xi[below] = w * (base.lower[below] - zt[below])
    xi[above] = w * (base.upper[above] - zt[above])
    return xi


def objective_soft(x: np.ndarray, xi: np.ndarray, prob: SoftQpProblem) -> float:
    return prob.base.objective(x) + 0.5 * prob.alpha * float(xi @ xi)


# ---------------------------------------------------------------------------
# problem file format
#
#   n 2
#   p 1
#   Q 1 0 0 1
#   ...
#
# Keys are followed by whitespace-separated numbers, possibly across lines.

_KEYS = ("n", "p", "Q", "q", "A", "l", "u", "alpha")
_TOKEN = re.compile(r"\S+")


class ProblemFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


def _parse_number(tok: str, line: int, col: int) -> float:
    low = tok.lower()
    if low in ("inf", "+inf"):
        return math.inf
    if low == "-inf":
        return -math.inf
    try:
        val = float(tok)
    except ValueError:
        raise ProblemFormatError(f"expected a number, got {tok!r}", line, col) from None
    if not math.isfinite(val):
        raise ProblemFormatError(f"invalid number {tok!r}", line, col)
    return val


def parse_problem(text: str) -> QpProblem | SoftQpProblem:
    """Parse the text problem format; the presence of ``alpha`` makes it soft."""
    values: dict[str, list[tuple[float, int, int]]] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for m in _TOKEN.finditer(line):
            tok, col = m.group(), m.start() + 1
            if tok in _KEYS:
                if tok in values:
                    raise ProblemFormatError(f"duplicate key {tok!r}", lineno, col)
                current = tok
                values[tok] = []
                values[tok].append((math.nan, lineno, col))  # key position marker
            elif current is None:
                raise ProblemFormatError(f"expected a key, got {tok!r}", lineno, col)
            else:
                values[current].append((_parse_number(tok, lineno, col), lineno, col))

    for key in ("n", "p", "Q", "q", "A", "l", "u"):
        if key not in values:
            raise ProblemFormatError(f"missing key {key!r}")

    def nums(key):
        return [v for v, _, _ in values[key][1:]]

    def count(key):
        vals = nums(key)
        _, line, col = values[key][0]
        if len(vals) != 1 or vals[0] != int(vals[0]) or vals[0] < 0:
            raise ProblemFormatError(f"{key!r} must be a single non-negative integer", line, col)
        return int(vals[0])

    n, p = count("n"), count("p")
    expected = {"Q": n * n, "q": n, "A": p * n, "l": p, "u": p}
    for key, size in expected.items():
        vals = nums(key)
        _, line, col = values[key][0]
        if len(vals) != size:
            raise ProblemFormatError(f"{key!r} needs {size} values, got {len(vals)}", line, col)
        if key in ("Q", "q", "A") and not all(math.isfinite(v) for v in vals):
            raise ProblemFormatError(f"{key!r} must be finite", line, col)
    base = QpProblem(
        np.array(nums("Q")).reshape(n, n),
        np.array(nums("q")),
        np.array(nums("A")).reshape(p, n),
        np.array(nums("l")),
        np.array(nums("u")),
    )
    if "alpha" not in values:
        return base
    vals = nums("alpha")
    _, line, col = values["alpha"][0]
    if len(vals) != 1 or not (vals[0] > 0 and math.isfinite(vals[0])):
        raise ProblemFormatError("'alpha' must be a single positive number", line, col)
    return SoftQpProblem(base, vals[0])


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def format_problem(prob: QpProblem | SoftQpProblem) -> str:
    base = prob.base if isinstance(prob, SoftQpProblem) else prob
    lines = [f"n {base.n}", f"p {base.p}"]
    lines.append("Q " + " ".join(_fmt(v) for v in base.Q.ravel()))
    lines.append("q " + " ".join(_fmt(v) for v in base.q))
    lines.append("A " + " ".join(_fmt(v) for v in base.A.ravel()))
    lines.append("l " + " ".join(_fmt(v) for v in base.lower))
    lines.append("u " + " ".join(_fmt(v) for v in base.upper))
    if isinstance(prob, SoftQpProblem):
        lines.append(f"alpha {_fmt(prob.alpha)}")
    return "\n".join(lines) + "\n"


def read_problem(path: str | Path) -> QpProblem | SoftQpProblem:
    return parse_problem(Path(path).read_text())


def write_problem(prob: QpProblem | SoftQpProblem, path: str | Path) -> None:
    Path(path).write_text(format_problem(prob))
