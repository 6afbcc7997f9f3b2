import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slackadmm import oracle
from slackadmm.linalg import factorize_spd, gram_plus
from slackadmm.problem import QpProblem, SoftQpProblem, augment
from slackadmm.solver import (
    AdmmEngine,
    AssumptionError,
    ResidualPair,
    SolverSettings,
    SolverState,
    Status,
    dual_update,
    project_hard,
    project_smoothed,
    residuals,
    solve_hard,
    solve_soft_augmented,
    solve_soft_smoothed,
    update_rho,
    x_update,
)

INF = math.inf


def qp(Q, q, A, lo, hi):
    return QpProblem(np.array(Q, float), np.array(q, float), np.array(A, float), np.array(lo, float),
                     np.array(hi, float))


def state(Q, A, x, z, mu, rho):
    f = factorize_spd(gram_plus(np.array(Q, float), np.array(A, float), rho))
    return SolverState(np.array(x, float), np.array(z, float), np.array(mu, float), rho, f)


def pair(prim, dual):
    return ResidualPair(np.array([prim]), np.array([dual]), prim, dual)


ONE_D_SOFT = SoftQpProblem(qp([[1]], [0], [[1]], [1], [2]), 10.0)


class TestXUpdate:
    def test_scalar(self):
        prob = qp([[1]], [0], [[1]], [0], [1])
        assert x_update(state([[1]], [[1]], [0], [1], [0], 1.0), prob)[0] == pytest.approx(0.5)

    def test_zero_rhs(self):
        prob = qp(np.eye(2), [0, 0], np.eye(2), [0, 0], [1, 1])
        assert not np.any(x_update(state(np.eye(2), np.eye(2), [5, 5], [0, 0], [0, 0], 2.0), prob))

    def test_with_multiplier(self):
        # (1 + 4)^-1 (1 - 2 + 6)
        prob = qp([[1]], [-1], [[2]], [0], [9])
        assert x_update(state([[1]], [[2]], [0], [3], [1], 1.0), prob)[0] == pytest.approx(1.0)


class TestProjections:
    def test_hard(self):
        lo, hi = np.array([0.0, 0.0, -INF]), np.array([1.0, 1.0, 0.0])
        assert np.array_equal(project_hard(np.array([0.5, 2.0, -3.0]), lo, hi), [0.5, 1.0, -3.0])

    def test_smoothed_above(self):
        assert project_smoothed(np.array([2.0]), np.array([0.0]), np.array([1.0]), 1.0, 1.0)[0] == 1.5

    def test_smoothed_interior_and_bounds_untouched(self):
        zt = np.array([0.0, 0.25, 1.0])
        assert np.array_equal(project_smoothed(zt, np.zeros(3), np.ones(3), 1.0, 1.0), zt)

    def test_smoothed_large_alpha_is_hard(self):
        z = project_smoothed(np.array([2.0]), np.array([0.0]), np.array([1.0]), 1.0, 1e12)
        assert z[0] == pytest.approx(1.0, abs=1e-11)

    def test_smoothed_infinite_bounds(self):
        z = project_smoothed(np.array([-1e9, 1e9]), np.array([-INF, 0.0]), np.array([0.0, INF]), 1.0, 1.0)
        assert np.array_equal(z, [-1e9, 1e9])

    def test_hard_is_idempotent(self):
        rng = np.random.default_rng(0)
        zt = rng.uniform(-5, 5, 100)
        lo, hi = -np.ones(100), np.ones(100)
        once = project_hard(zt, lo, hi)
        assert np.array_equal(project_hard(once, lo, hi), once)

    def test_smoothed_is_not_idempotent(self):
        lo, hi = np.array([0.0]), np.array([1.0])
        once = project_smoothed(np.array([3.0]), lo, hi, 1.0, 1.0)
        twice = project_smoothed(once, lo, hi, 1.0, 1.0)
        assert once[0] == 2.0 and twice[0] == 1.5 and twice[0] < once[0]


class TestDualUpdate:
    def test_consensus_leaves_mu(self):
        assert np.array_equal(dual_update(np.array([3.0]), np.array([1.0]), np.array([1.0]), 7.0), [3.0])

    def test_step(self):
        assert dual_update(np.zeros(1), np.array([1.0]), np.array([0.5]), 2.0)[0] == 1.0

    def test_negative(self):
        assert dual_update(np.array([-1.0]), np.zeros(1), np.ones(1), 1.0)[0] == -2.0


class TestResiduals:
    def test_kkt_point(self):
        # min 1/2 x^2 s.t. x >= 1: x = 1, multiplier -1
        r = residuals(qp([[1]], [0], [[1]], [1], [INF]), np.ones(1), np.ones(1), -np.ones(1))
        assert r.prim_norm == 0 and r.dual_norm == 0

    def test_zero(self):
        r = residuals(qp([[1]], [0], [[1]], [0], [1]), np.zeros(1), np.zeros(1), np.zeros(1))
        assert r.prim_norm == r.dual_norm == 0

    def test_values(self):
        r = residuals(qp([[1]], [1], [[1]], [0], [1]), np.array([2.0]), np.array([1.0]), np.zeros(1))
        assert r.r_prim[0] == 1 and r.r_dual[0] == 3
        assert (r.prim_norm, r.dual_norm) == (1, 3)


class TestUpdateRho:
    cfg = SolverSettings()

    def test_primal_dominant(self):
        assert update_rho(1.0, pair(100, 1), self.cfg) == pytest.approx(10.0)

    def test_balanced(self):
        assert update_rho(0.3, pair(2.0, 2.0), self.cfg) == 0.3

    def test_dual_dominant(self):
        assert update_rho(10.0, pair(1, 100), self.cfg) == pytest.approx(1.0)

    def test_threshold_is_strict(self):
        assert update_rho(1.0, pair(25.0, 1.0), self.cfg) == 1.0
        assert update_rho(1.0, pair(25.0001, 1.0), self.cfg) == pytest.approx(math.sqrt(25.0001))

    def test_zero_norms_are_floored(self):
        assert update_rho(1.0, pair(0.0, 0.0), self.cfg) == 1.0
        assert update_rho(1.0, pair(1e-4, 0.0), self.cfg) == pytest.approx(1e4)

    def test_clamped(self):
        assert update_rho(1e5, pair(1e6, 1e-6), self.cfg) == self.cfg.rho_max
        assert update_rho(1e-5, pair(1e-6, 1e6), self.cfg) == self.cfg.rho_min


class TestSettings:
    def test_defaults(self):
        s = SolverSettings()
        assert (s.rho0, s.eps, s.kappa, s.n_rho, s.max_iter) == (0.1, 1e-6, 5.0, 25, 20000)

    @pytest.mark.parametrize("kw", [dict(kappa=1.0), dict(rho0=2e6), dict(eps=0), dict(n_rho=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverSettings(**kw)


class TestSolveHard:
    def test_box(self):
        rep = solve_hard(qp([[1]], [0], [[1]], [1], [2]))
        assert rep.status is Status.CONVERGED
        assert rep.x[0] == pytest.approx(1.0, abs=1e-4)
        assert rep.xi is None

    def test_free_rows(self):
        rep = solve_hard(qp([[1]], [0.7], [[1]], [-INF], [INF]))
        assert rep.x[0] == pytest.approx(-0.7, abs=1e-5)

    def test_hyperplane(self):
        rep = solve_hard(qp(np.eye(2), [0, 0], [[1, 1]], [2], [2]))
        assert rep.converged
        assert np.allclose(rep.x, [1, 1], atol=1e-4)

    def test_assumption_violation(self):
        with pytest.raises(AssumptionError, match="regularize"):
            solve_hard(qp([[0, 0], [0, 1]], [0, 0], [[0, 1]], [0], [1]))

    def test_infeasible_does_not_converge(self):
        rep = solve_hard(qp([[1]], [0], [[1], [1]], [1, 2], [1, 2]), SolverSettings(max_iter=2000))
        assert rep.status is Status.MAX_ITERATIONS and rep.iterations == 2000


class TestSolveSoft:
    @pytest.mark.parametrize("solve", [solve_soft_augmented, solve_soft_smoothed])
    def test_one_dimensional(self, solve):
        rep = solve(ONE_D_SOFT)
        assert rep.converged
        assert rep.x[0] == pytest.approx(10 / 11, abs=1e-3)
        assert rep.xi[0] == pytest.approx(1 / 11, abs=1e-3)
        assert rep.objective == pytest.approx(5 / 11, abs=1e-3)

    @pytest.mark.parametrize("solve", [solve_soft_augmented, solve_soft_smoothed])
    def test_large_alpha_recovers_hard(self, solve):
        base = qp(np.eye(2), [1, -3], [[1, 1], [1, -1], [1, 0]], [-1, -INF, 0], [1, 0.5, INF])
        hard = solve_hard(base)
        rep = solve(SoftQpProblem(base, 1e8))
        assert np.max(np.abs(rep.x - hard.x)) < 1e-3
        assert np.max(np.abs(rep.xi)) < 1e-5

    @pytest.mark.parametrize("solve", [solve_soft_augmented, solve_soft_smoothed])
    def test_contradictory_equalities(self, solve):
        # x + xi1 = 1, x + xi2 = 2; optimum x = 3 alpha / (1 + 2 alpha)
        prob = SoftQpProblem(qp([[1]], [0], [[1], [1]], [1, 2], [1, 2]), 10.0)
        rep = solve(prob)
        assert rep.converged
        assert rep.x[0] == pytest.approx(30 / 21, abs=1e-4)
        assert np.allclose(rep.xi, [1 - 30 / 21, 2 - 30 / 21], atol=1e-4)

    def test_soft_equality_row(self):
        rep = solve_soft_smoothed(SoftQpProblem(qp([[1]], [0], [[1]], [1], [1]), 10.0))
        assert rep.x[0] == pytest.approx(10 / 11, abs=1e-4)

    def test_smoothed_keeps_problem_size(self, monkeypatch):
        seen = []
        import slackadmm.solver as mod
        real = mod.factorize_spd
        monkeypatch.setattr(mod, "factorize_spd", lambda M: seen.append(M.shape) or real(M))
        prob = SoftQpProblem(qp(np.eye(3), [1, 1, 1], np.ones((4, 3)), [0] * 4, [1] * 4), 1.0)
        solve_soft_smoothed(prob)
        assert seen and all(s == (3, 3) for s in seen)
        seen.clear()
        solve_soft_augmented(prob)
        assert seen and all(s == (7, 7) for s in seen)

    def test_smoothed_needs_definiteness_only_on_base(self):
        prob = SoftQpProblem(qp([[0]], [1], [[0]], [0], [1]), 1.0)
        with pytest.raises(AssumptionError):
            solve_soft_smoothed(prob)


class TestTermination:
    @pytest.mark.parametrize("eps", [1e-2, 1e-5, 1e-9])
    def test_converged_iff_below_eps(self, eps):
        rep = solve_soft_smoothed(ONE_D_SOFT, SolverSettings(eps=eps))
        assert rep.converged == (rep.residuals.worst < eps)
        assert rep.converged

    def test_max_iter_status(self):
        rep = solve_soft_smoothed(ONE_D_SOFT, SolverSettings(eps=1e-12, max_iter=3))
        assert rep.status is Status.MAX_ITERATIONS and rep.iterations == 3
        assert not rep.residuals.worst < 1e-12


class TestRhoSchedule:
    def run(self):
        rng = np.random.default_rng(5)
        n, p = 6, 9
        G = rng.standard_normal((n, n))
        prob = SoftQpProblem(QpProblem(G @ G.T + 0.01 * np.eye(n), 100 * rng.standard_normal(n),
                                       rng.standard_normal((p, n)), -np.ones(p), np.ones(p)), 5.0)
        cfg = SolverSettings(rho0=1e-5, eps=1e-10, max_iter=400, log_iterates=True)
        return solve_soft_smoothed(prob, cfg), cfg

    def test_changes_only_on_period(self):
        rep, cfg = self.run()
        log = rep.iterate_log
        changes = [log[k][0] for k in range(len(log) - 1) if log[k + 1][3] != log[k][3]]
        assert changes, "schedule never triggered"
        assert all(it % cfg.n_rho == 0 for it in changes)

    def test_factor_and_trigger(self):
        rep, cfg = self.run()
        log = rep.iterate_log
        for k in range(len(log) - 1):
            it, prim, dual, rho = log[k]
            if it % cfg.n_rho:
                continue
            ratio = math.sqrt(max(prim, 1e-12) / max(dual, 1e-12))
            nxt = log[k + 1][3]
            if ratio > cfg.kappa or 1 / ratio > cfg.kappa:
                assert nxt == min(max(rho * ratio, cfg.rho_min), cfg.rho_max)
            else:
                assert nxt == rho

    def test_fixed_when_disabled(self):
        cfg = SolverSettings(rho0=1e-5, eps=1e-10, max_iter=200, log_iterates=True, adaptive_rho=False)
        rep = solve_soft_smoothed(ONE_D_SOFT, cfg)
        assert {row[3] for row in rep.iterate_log} == {1e-5}


def _fixed_point_runs():
    """(engine, x, z, mu) at an exact KKT point built from the active-set oracle."""
    rng = np.random.default_rng(11)
    runs = []
    for _ in range(5):
        n, p = 3, 4
        G = rng.standard_normal((n, n))
        lo = rng.uniform(-1, 0, p)
        base = QpProblem(G @ G.T + 0.5 * np.eye(n), rng.standard_normal(n) * 3, rng.standard_normal((p, n)),
                         lo, lo + rng.uniform(0.1, 1, p))
        soft = SoftQpProblem(base, 2.0)
        rho = float(10 ** rng.uniform(-1, 1))
        cfg = SolverSettings(rho0=rho, adaptive_rho=False)
        try:
            hard = oracle.solve_qp_active_set(base)
        except oracle.Infeasible:
            hard = None
        if hard is not None:
            eng = AdmmEngine(base, cfg, lambda zt, r, b=base: project_hard(zt, b.lower, b.upper),
                             x0=hard.x, z0=base.A @ hard.x, mu0=hard.multipliers)
            runs.append(("hard", eng))
        x, xi, sol = oracle.solve_soft_qp_reference(soft)
        eng = AdmmEngine(base, cfg, lambda zt, r, b=base: project_smoothed(zt, b.lower, b.upper, r, 2.0),
                         x0=x, z0=base.A @ x, mu0=sol.multipliers)
        runs.append(("smoothed", eng))
        aug = augment(soft)
        eng = AdmmEngine(aug, cfg, lambda zt, r, a=aug: project_hard(zt, a.lower, a.upper),
                         x0=sol.x, z0=aug.A @ sol.x, mu0=sol.multipliers)
        runs.append(("augmented", eng))
    return runs


@pytest.mark.parametrize("kind,eng", _fixed_point_runs())
def test_kkt_points_are_fixed(kind, eng):
    x0, z0, mu0 = eng.state.x.copy(), eng.state.z.copy(), eng.state.mu.copy()
    r0 = residuals(eng.prob, x0, z0, mu0)
    assert r0.worst < 1e-9
    eng.step()
    assert np.max(np.abs(eng.state.x - x0)) < 1e-10
    assert np.max(np.abs(eng.state.z - z0)) < 1e-10
    assert np.max(np.abs(eng.state.mu - mu0)) < 1e-10


@settings(max_examples=300, deadline=None)
@given(zt=st.floats(-1e3, 1e3), lo=st.floats(-10, 10), width=st.floats(0, 10),
       rho=st.floats(1e-3, 1e3), alpha=st.floats(1e-3, 1e3))
def test_averaged_projection(zt, lo, width, rho, alpha):
    z, l, u = np.array([zt]), np.array([lo]), np.array([lo + width])
    gamma = alpha / (alpha + rho)
    expected = (1 - gamma) * z + gamma * project_hard(z, l, u)
    assert abs(project_smoothed(z, l, u, rho, alpha)[0] - expected[0]) <= 1e-14 * max(1, abs(zt), abs(lo) + width)


@settings(max_examples=100, deadline=None)
@given(zt=st.floats(1.01, 1e3), rho=st.floats(1e-2, 1e2))
def test_smoothed_limits(zt, rho):
    lo, hi = np.array([-1.0]), np.array([1.0])
    dist = [abs(project_smoothed(np.array([zt]), lo, hi, rho, a)[0] - 1.0) for a in (1e-3, 1.0, 1e3, 1e9)]
    assert all(d1 >= d2 for d1, d2 in zip(dist, dist[1:]))
    assert dist[-1] < 1e-6 * zt
    assert abs(project_smoothed(np.array([zt]), lo, hi, rho, 1e-12)[0] - zt) < 1e-9 * zt
