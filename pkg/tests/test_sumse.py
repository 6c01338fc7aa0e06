import numpy as np
import pytest

from mimopower.gp import evaluate
from mimopower.maxmin import DATA_ONLY, JOINT, solve_maxmin
from mimopower.model import (
    LargeScaleFading,
    PowerAllocation,
    SystemConfig,
    equal_power_allocation,
    se_report,
    sinr_all,
)
from mimopower.sumse import (
    CONVERGED,
    ScaOptions,
    build_sca_subproblem,
    sca_solve,
    stationarity_residual,
)

from conftest import random_instance


def _feasible_alloc(rng, cfg):
    """A random strictly feasible full-budget-or-less allocation."""
    rho = rng.uniform(0.05, 0.95, cfg.K)
    frac = rng.uniform(0.3, 0.98, cfg.K)
    p_p = rho * frac * cfg.E_max / cfg.tau_p
    p_u = (1 - rho) * frac * cfg.E_max / (cfg.T - cfg.tau_p)
    return PowerAllocation(p_p=p_p, p_u=p_u)


def _sinr_constraint_ok(alloc, lam, fading, cfg, tol=1e-8):
    """True when lambda_k <= 1 + SINR_k for every k (the original form the
    condensed subproblem constraint inner-approximates)."""
    return np.all(lam <= 1.0 + sinr_all(alloc, fading, cfg) * (1 + tol) + tol)


class TestSubproblem:
    def test_tangency_at_expansion_point(self, rng):
        fading, cfg = random_instance(rng, M=50, K=4, T=60)
        alloc = _feasible_alloc(rng, cfg)
        prob = build_sca_subproblem(fading, cfg, JOINT, alloc)
        point = {f"pp{k}": float(alloc.p_p[k]) for k in range(cfg.K)}
        point.update({f"pu{k}": float(alloc.p_u[k]) for k in range(cfg.K)})
        s = sinr_all(alloc, fading, cfg)
        # with lambda_k = 1 + SINR_k the condensed constraint is tight at the
        # expansion point (monomial approximation is exact there)
        point.update({f"lam{k}": 1.0 + float(s[k]) for k in range(cfg.K)})
        for k in range(cfg.K):
            assert evaluate(prob.constraints[k], point) == pytest.approx(1.0, rel=1e-12)

    def test_expansion_point_feasible_for_subproblem(self, rng):
        fading, cfg = random_instance(rng, M=50, K=4, T=60)
        alloc = _feasible_alloc(rng, cfg)
        prob = build_sca_subproblem(fading, cfg, JOINT, alloc)
        s = sinr_all(alloc, fading, cfg)
        point = {f"pp{k}": float(alloc.p_p[k]) for k in range(cfg.K)}
        point.update({f"pu{k}": float(alloc.p_u[k]) for k in range(cfg.K)})
        point.update({f"lam{k}": (1.0 + float(s[k])) * 0.999 for k in range(cfg.K)})
        for c in prob.constraints:
            assert evaluate(c, point) <= 1.0

    def test_feasible_set_is_inner(self, rng):
        """Subproblem-feasible points satisfy the true SINR constraints."""
        fading, cfg = random_instance(rng, M=50, K=3, T=60)
        x_prev = _feasible_alloc(rng, cfg)
        prob = build_sca_subproblem(fading, cfg, JOINT, x_prev)
        checked = 0
        while checked < 1000:
            alloc = _feasible_alloc(rng, cfg)
            lam = rng.uniform(1.0, 4.0, cfg.K)
            point = {f"pp{k}": float(alloc.p_p[k]) for k in range(cfg.K)}
            point.update({f"pu{k}": float(alloc.p_u[k]) for k in range(cfg.K)})
            point.update({f"lam{k}": float(lam[k]) for k in range(cfg.K)})
            if any(evaluate(c, point) > 1.0 for c in prob.constraints):
                continue
            assert _sinr_constraint_ok(alloc, lam, fading, cfg)
            checked += 1


class TestScaSolve:
    def test_k1_coincides_with_maxmin(self, rng):
        fading, cfg = random_instance(rng, M=20, K=1, T=20)
        mm = solve_maxmin(fading, cfg, JOINT)
        sol = sca_solve(fading, cfg, JOINT)
        assert sol.status == CONVERGED
        assert sol.sca_iterations <= 2
        assert sol.report.sum_se == pytest.approx(mm.report.min_se, rel=1e-6)

    def test_k2_near_global_grid_optimum(self, rng):
        wins = 0
        for _ in range(50):
            fading, cfg = random_instance(rng, M=20, K=2, T=40)
            sol = sca_solve(fading, cfg, JOINT)
            # oracle: full-budget split per user, dense pilot-fraction grid
            half = np.geomspace(1e-4, 0.5, 200)
            ax = np.concatenate([half, 1.0 - half[::-1]])
            rho = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)
            beta = fading.beta
            tau, T, E, M = cfg.tau_p, cfg.T, cfg.E_max, cfg.M
            p_p = rho * E / tau
            p_u = (1.0 - rho) * E / (T - tau)
            num = (M - 1) * tau * beta**2 * p_p * p_u
            tot = (p_u * beta).sum(axis=-1, keepdims=True)
            den = 1.0 + tot + tau * beta * p_p * (1.0 + tot - p_u * beta)
            se = cfg.prefactor * np.log2(1.0 + num / den)
            oracle = float(se.sum(axis=-1).max())
            if sol.report.sum_se >= 0.99 * oracle:
                wins += 1
        assert wins >= 45

    def test_monotone_trace_and_convergence(self, rng):
        for _ in range(5):
            fading, cfg = random_instance(rng, M=100, K=10, T=200)
            sol = sca_solve(fading, cfg, JOINT)
            tr = sol.objective_trace
            assert all(b >= a - 1e-9 for a, b in zip(tr, tr[1:]))
            if sol.status == CONVERGED and len(tr) > 1:
                assert abs(tr[-1] - tr[-2]) / tr[-1] <= 1e-6 or \
                    sol.stationarity_residual <= 1e-5

    def test_stationarity_at_convergence(self, rng):
        fading, cfg = random_instance(rng, M=100, K=10, T=200)
        sol = sca_solve(fading, cfg, JOINT)
        assert sol.status == CONVERGED
        assert sol.stationarity_residual <= 1e-5

    def test_lambdas_match_report(self, rng):
        fading, cfg = random_instance(rng, M=50, K=5, T=100)
        sol = sca_solve(fading, cfg, JOINT)
        assert np.all(sol.lambdas >= 1.0)
        np.testing.assert_allclose(sol.lambdas, 1.0 + sol.report.sinr, rtol=1e-12)

    def test_dominance(self, rng):
        for _ in range(3):
            fading, cfg = random_instance(rng, M=50, K=5, T=100)
            joint = sca_solve(fading, cfg, JOINT).report.sum_se
            data = sca_solve(fading, cfg, DATA_ONLY).report.sum_se
            equal = se_report(equal_power_allocation(cfg), fading, cfg).sum_se
            assert joint >= data * (1 - 1e-6)
            assert data >= equal * (1 - 1e-6)

    def test_iteration_cap_respected(self, rng):
        fading, cfg = random_instance(rng, M=100, K=10, T=200)
        sol = sca_solve(fading, cfg, JOINT, ScaOptions(max_iterations=3))
        assert sol.sca_iterations <= 3


class TestStationarityResidual:
    def test_interior_unconstrained_gradient(self, rng):
        # far inside the budget the residual is just the normalized gradient
        fading, cfg = random_instance(rng, M=50, K=3, T=60)
        eq = equal_power_allocation(cfg)
        alloc = PowerAllocation(p_p=eq.p_p * 0.1, p_u=eq.p_u * 0.1)
        r = stationarity_residual(alloc, fading, cfg, JOINT)
        assert r > 1e-2  # nowhere near stationary

    def test_small_at_sca_solution(self, rng):
        fading, cfg = random_instance(rng, M=50, K=5, T=100)
        sol = sca_solve(fading, cfg, JOINT)
        assert stationarity_residual(sol.alloc, fading, cfg, JOINT) <= 1e-5
