"""Sum-SE maximization by successive convex approximation.

Maximizing sum SE is NP-hard, so we iterate: write 1 + SINR_k >= lambda_k in
cleared form lambda_k * D_k / g_k <= 1 with g_k = D_k + N_k (a posynomial in
the denominator, which breaks GP form), replace g_k by its tangent monomial
lower bound at the previous iterate, and solve the resulting GP.  The inner
approximation is tangent and global, so iterates stay feasible, the true
objective is non-decreasing, and the loop converges to a KKT point of the
original problem.  Initialization is the max-min solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .gp import (
    GpProblem,
    GpSolverError,
    GpSolverOptions,
    Monomial,
    Posynomial,
    monomial_approximation,
    solve_gp,
)
from .maxmin import (
    DATA_ONLY,
    JOINT,
    _POWER_LB_FRACTION,
    _check_mode,
    budget_constraints,
    exhaust_budget_with_pilot,
    solve_maxmin,
)
from .model import (
    LargeScaleFading,
    PowerAllocation,
    SeReport,
    SystemConfig,
    energy_slack,
    equal_power_allocation,
    normalize_instance,
    se_report,
    sinr_all,
)

CONVERGED = "Converged"
MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class ScaOptions:
    max_iterations: int = 50
    rel_tol: float = 1e-6  # relative objective change declaring convergence
    stationarity_tol: float = 1e-5
    gp_opts: GpSolverOptions = field(default_factory=GpSolverOptions)


@dataclass(frozen=True)
class SumSeSolution:
    alloc: PowerAllocation
    lambdas: np.ndarray  # 1 + SINR_k at the final iterate
    report: SeReport
    sca_iterations: int
    objective_trace: list[float]  # sum SE (bit/s/Hz) per accepted iterate
    status: str
    stationarity_residual: float


def _dk_terms(beta: np.ndarray, cfg: SystemConfig, k: int, pilot_fixed: float | None) -> list[Monomial]:
    """Monomial terms of the SINR denominator D_k in the power variables."""
    tau = cfg.tau_p
    bk = float(beta[k])

    def with_pilot(extra: dict[str, float], scale: float) -> Monomial:
        if pilot_fixed is None:
            exps = dict(extra)
            exps[f"pp{k}"] = exps.get(f"pp{k}", 0.0) + 1.0
            return Monomial(scale, exps)
        return Monomial(scale * pilot_fixed, extra)

    terms = [Monomial(1.0)]
    for j in range(cfg.K):
        terms.append(Monomial(float(beta[j]), {f"pu{j}": 1.0}))
    terms.append(with_pilot({}, tau * bk))
    for j in range(cfg.K):
        if j != k:
            terms.append(with_pilot({f"pu{j}": 1.0}, tau * bk * float(beta[j])))
    return terms


def _nk(beta: np.ndarray, cfg: SystemConfig, k: int, pilot_fixed: float | None) -> Monomial:
    """Signal monomial N_k = (M-1) tau_p beta_k^2 p_p^k p_u^k."""
    bk = float(beta[k])
    scale = (cfg.M - 1) * cfg.tau_p * bk * bk
    if pilot_fixed is None:
        return Monomial(scale, {f"pp{k}": 1.0, f"pu{k}": 1.0})
    return Monomial(scale * pilot_fixed, {f"pu{k}": 1.0})


def _alloc_point(alloc: PowerAllocation, cfg: SystemConfig, mode: str) -> dict[str, float]:
    x = {f"pu{k}": float(alloc.p_u[k]) for k in range(cfg.K)}
    if mode == JOINT:
        x.update({f"pp{k}": float(alloc.p_p[k]) for k in range(cfg.K)})
    return x


def build_sca_subproblem(
    fading: LargeScaleFading,
    cfg: SystemConfig,
    mode: str,
    x_prev: PowerAllocation,
) -> GpProblem:
    """One inner GP: maximize prod lambda_k with each posynomial denominator
    g_k condensed to its tangent monomial at x_prev."""
    _check_mode(mode)
    beta = fading.beta
    pilot_fixed = None if mode == JOINT else cfg.E_max / cfg.T
    point = _alloc_point(x_prev, cfg, mode)

    constraints = []
    for k in range(cfg.K):
        dk = _dk_terms(beta, cfg, k, pilot_fixed)
        gk = Posynomial(tuple(dk) + (_nk(beta, cfg, k, pilot_fixed),))
        g_tilde = monomial_approximation(gk, point)
        lam_over_g = Monomial(1.0, {f"lam{k}": 1.0}) / g_tilde
        constraints.append(Posynomial(tuple(t * lam_over_g for t in dk)))
    constraints += budget_constraints(cfg, pilot_fixed)

    lb = _POWER_LB_FRACTION * cfg.E_max / cfg.T
    bounds: dict[str, tuple[float | None, float | None]] = {
        f"pu{k}": (lb, None) for k in range(cfg.K)
    }
    if pilot_fixed is None:
        bounds.update({f"pp{k}": (lb, None) for k in range(cfg.K)})
    # lambda_k >= 1 keeps the epigraph variables meaningful (SINR >= 0)
    bounds.update({f"lam{k}": (1.0, None) for k in range(cfg.K)})

    objective = Monomial(1.0, {f"lam{k}": -1.0 for k in range(cfg.K)})
    return GpProblem(objective=objective, constraints=tuple(constraints), bounds=bounds)


def _sum_se(alloc: PowerAllocation, fading: LargeScaleFading, cfg: SystemConfig) -> float:
    return float(np.sum(cfg.prefactor * np.log2(1.0 + sinr_all(alloc, fading, cfg))))


def stationarity_residual(
    alloc: PowerAllocation,
    fading: LargeScaleFading,
    cfg: SystemConfig,
    mode: str,
    active_tol: float = 1e-5,
) -> float:
    """KKT residual of the true sum-SE problem in log-power coordinates.

    Gradient of F(z) = sum_k log(1 + SINR_k) (central differences) projected
    onto the cone spanned by the active budget-constraint gradients with
    nonnegative multipliers; returns the infinity norm of what is left,
    normalized by max(1, ||grad F||_inf).
    """
    _check_mode(mode)
    K = cfg.K
    joint = mode == JOINT
    nvar = 2 * K if joint else K

    def unpack(z: np.ndarray) -> PowerAllocation:
        p_u = np.exp(z[:K])
        p_p = np.exp(z[K:]) if joint else np.asarray(alloc.p_p)
        return PowerAllocation(p_p=p_p, p_u=p_u)

    z0 = np.log(np.concatenate([alloc.p_u, alloc.p_p]) if joint else alloc.p_u)

    def F(z: np.ndarray) -> float:
        return float(np.sum(np.log1p(sinr_all(unpack(z), fading, cfg))))

    h = 1e-6
    grad = np.empty(nvar)
    for i in range(nvar):
        zp, zm = z0.copy(), z0.copy()
        zp[i] += h
        zm[i] -= h
        grad[i] = (F(zp) - F(zm)) / (2 * h)

    # active budget constraints, log-space gradients
    used = cfg.tau_p * alloc.p_p + (cfg.T - cfg.tau_p) * alloc.p_u
    cols = []
    for k in range(K):
        if used[k] >= cfg.E_max * (1.0 - active_tol):
            g = np.zeros(nvar)
            if joint:
                g[k] = (cfg.T - cfg.tau_p) * alloc.p_u[k] / used[k]
                g[K + k] = cfg.tau_p * alloc.p_p[k] / used[k]
            else:
                # budget reduces to the cap p_u <= E_max/T
                g[k] = 1.0
            cols.append(g)

    norm = max(1.0, float(np.max(np.abs(grad))))
    if not cols:
        return float(np.max(np.abs(grad))) / norm
    J = np.column_stack(cols)
    mu, _ = scipy.optimize.nnls(J, grad)
    return float(np.max(np.abs(grad - J @ mu))) / norm


def sca_solve(
    fading: LargeScaleFading,
    cfg: SystemConfig,
    mode: str = JOINT,
    opts: ScaOptions | None = None,
) -> SumSeSolution:
    """Run the successive convex approximation loop to a KKT point."""
    _check_mode(mode)
    opts = opts or ScaOptions()
    fading_n, cfg_n, scale = normalize_instance(fading, cfg)

    try:
        current = solve_maxmin(fading_n, cfg_n, mode).alloc
    except GpSolverError:
        eq = equal_power_allocation(cfg_n)
        current = PowerAllocation(p_p=eq.p_p, p_u=eq.p_u * 0.99)

    trace = [_sum_se(current, fading_n, cfg_n)]
    status = MAX_ITERATIONS
    iterations = 0
    for _ in range(opts.max_iterations):
        iterations += 1
        prob = build_sca_subproblem(fading_n, cfg_n, mode, current)
        # Start strictly inside: shrink powers a little and set each lambda_k
        # below its achievable value at the shrunk point.
        shrunk = PowerAllocation(p_p=current.p_p * (0.999 if mode == JOINT else 1.0),
                                 p_u=current.p_u * 0.999)
        x0 = _alloc_point(shrunk, cfg_n, mode)
        lam0 = (1.0 + sinr_all(shrunk, fading_n, cfg_n)) * 0.999
        x0.update({f"lam{k}": max(float(lam0[k]), 1.0 + 1e-9) for k in range(cfg_n.K)})
        sol = solve_gp(prob, x0=x0, opts=opts.gp_opts)
        if sol.status != "Optimal":
            break
        candidate = PowerAllocation(
            p_p=(np.array([sol.x[f"pp{k}"] for k in range(cfg_n.K)])
                 if mode == JOINT else current.p_p),
            p_u=np.array([sol.x[f"pu{k}"] for k in range(cfg_n.K)]),
        )
        if mode == JOINT:
            candidate = exhaust_budget_with_pilot(candidate, cfg_n)
        value = _sum_se(candidate, fading_n, cfg_n)
        if value < trace[-1]:
            # below solver precision; keep the previous (better) iterate
            status = CONVERGED
            break
        moved = value - trace[-1]
        current = candidate
        trace.append(value)
        if moved <= opts.rel_tol * abs(value):
            resid = stationarity_residual(current, fading_n, cfg_n, mode)
            if resid <= opts.stationarity_tol:
                status = CONVERGED
                break

    alloc = PowerAllocation(p_p=current.p_p / scale, p_u=current.p_u / scale)
    report = se_report(alloc, fading, cfg)
    lambdas = 1.0 + report.sinr
    lambdas.flags.writeable = False
    return SumSeSolution(
        alloc=alloc,
        lambdas=lambdas,
        report=report,
        sca_iterations=iterations,
        objective_trace=trace,
        status=status,
        stationarity_residual=stationarity_residual(alloc, fading, cfg, mode),
    )
