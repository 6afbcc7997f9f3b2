"""ADMM for quadratic programs with quadratically penalized slack variables."""

from .problem import QpProblem, SoftQpProblem, augment, objective_soft, recover_slack, regularize, validate
from .solver import (
    Method,
    SolverSettings,
    SolveReport,
    Status,
    solve,
    solve_hard,
    solve_soft_augmented,
    solve_soft_smoothed,
)

__all__ = [
    "QpProblem",
    "SoftQpProblem",
    "augment",
    "objective_soft",
    "recover_slack",
    "regularize",
    "validate",
    "Method",
    "SolverSettings",
    "SolveReport",
    "Status",
    "solve",
    "solve_hard",
    "solve_soft_augmented",
    "solve_soft_smoothed",
]
