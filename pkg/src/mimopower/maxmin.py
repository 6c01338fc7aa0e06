"""Max-min SE power control as a single geometric program.

Maximizing the common SINR level lambda subject to the per-user SINR and
energy-budget constraints is a GP in (p_p, p_u, lambda): the objective is
the monomial 1/lambda and every constraint clears to posynomial <= 1 form.
The solution is globally optimal.

Joint mode optimizes pilot and payload powers; DataOnly fixes every pilot
power at E_max/T (folded into constants, not extra variables) and optimizes
payload only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gp import GpProblem, GpSolution, GpSolverError, GpSolverOptions, Monomial, Posynomial, solve_gp
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

JOINT = "Joint"
DATA_ONLY = "DataOnly"

# Power variables get a tiny lower bound to keep log-space iterates bounded;
# it is orders of magnitude below any power an optimum actually uses.
_POWER_LB_FRACTION = 1e-12


@dataclass(frozen=True)
class MaxMinSolution:
    alloc: PowerAllocation
    lam: float  # achieved common SINR (linear)
    report: SeReport
    gp_iterations: int


def _check_mode(mode: str):
    if mode not in (JOINT, DATA_ONLY):
        raise ValueError(f"mode must be {JOINT!r} or {DATA_ONLY!r}, got {mode!r}")


def sinr_constraint_posynomial(
    beta: np.ndarray, cfg: SystemConfig, k: int, lam_var: str,
    pilot_fixed: float | None,
) -> Posynomial:
    """Posynomial form of lambda * D_k / N_k <= 1 for user k.

    N_k = (M-1) tau_p beta_k^2 p_p^k p_u^k (monomial) and D_k is the
    interference-plus-noise denominator:
    1 + sum_j beta_j p_u^j + tau_p beta_k p_p^k
      + tau_p beta_k p_p^k sum_{j != k} beta_j p_u^j.
    With pilot_fixed set, p_p^k is that constant instead of a variable.
    """
    K = cfg.K
    tau = cfg.tau_p
    bk = float(beta[k])

    def pp_exp(extra: dict[str, float], scale: float) -> Monomial:
        # multiply by p_p^k, as variable or constant
        if pilot_fixed is None:
            exps = dict(extra)
            exps[f"pp{k}"] = exps.get(f"pp{k}", 0.0) + 1.0
            return Monomial(scale, exps)
        return Monomial(scale * pilot_fixed, extra)

    # 1 / N_k as a monomial factor, times lambda
    inv_nk_scale = 1.0 / ((cfg.M - 1) * tau * bk * bk)
    base_exps = {lam_var: 1.0, f"pu{k}": -1.0}
    if pilot_fixed is None:
        base_exps[f"pp{k}"] = -1.0
        inv_nk = Monomial(inv_nk_scale, base_exps)
    else:
        inv_nk = Monomial(inv_nk_scale / pilot_fixed, base_exps)

    terms = [inv_nk]  # the "1" of D_k times lambda/N_k
    for j in range(K):
        terms.append(Monomial(float(beta[j]), {f"pu{j}": 1.0}) * inv_nk)
    terms.append(pp_exp({}, tau * bk) * inv_nk)
    for j in range(K):
        if j != k:
            terms.append(pp_exp({f"pu{j}": 1.0}, tau * bk * float(beta[j])) * inv_nk)
    return Posynomial(tuple(terms))


def budget_constraints(cfg: SystemConfig, pilot_fixed: float | None) -> list[Posynomial]:
    """(tau_p p_p^k + (T - tau_p) p_u^k) / E_max <= 1 per user."""
    out = []
    tau, T, E = cfg.tau_p, cfg.T, cfg.E_max
    for k in range(cfg.K):
        data_term = Monomial((T - tau) / E, {f"pu{k}": 1.0})
        if pilot_fixed is None:
            out.append(Posynomial((Monomial(tau / E, {f"pp{k}": 1.0}), data_term)))
        else:
            # pilot energy is constant: fold it into the payload bound
            out.append(Posynomial((Monomial((T - tau) / (E - tau * pilot_fixed), {f"pu{k}": 1.0}),)))
    return out


def build_maxmin_gp(fading: LargeScaleFading, cfg: SystemConfig, mode: str = JOINT) -> GpProblem:
    """The max-min program: minimize 1/lambda s.t. SINR and budget posynomials."""
    _check_mode(mode)
    if fading.K != cfg.K:
        raise ValueError(f"fading has {fading.K} users, cfg expects {cfg.K}")
    pilot_fixed = None if mode == JOINT else cfg.E_max / cfg.T
    constraints = [
        sinr_constraint_posynomial(fading.beta, cfg, k, "lam", pilot_fixed)
        for k in range(cfg.K)
    ]
    constraints += budget_constraints(cfg, pilot_fixed)
    lb = _POWER_LB_FRACTION * cfg.E_max / cfg.T
    bounds = {f"pu{k}": (lb, None) for k in range(cfg.K)}
    if pilot_fixed is None:
        bounds.update({f"pp{k}": (lb, None) for k in range(cfg.K)})
    return GpProblem(
        objective=Monomial(1.0, {"lam": -1.0}),
        constraints=tuple(constraints),
        bounds=bounds,
    )


def _initial_point(fading: LargeScaleFading, cfg: SystemConfig, mode: str) -> dict[str, float]:
    """Equal power shrunk by 0.99 (strictly budget-feasible), lambda at 90%
    of the min SINR there (strictly SINR-feasible)."""
    eq = equal_power_allocation(cfg)
    shrink = 0.99
    if mode == JOINT:
        p_p = eq.p_p * shrink
        p_u = eq.p_u * shrink
    else:
        p_p = eq.p_p  # fixed constants, not shrunk
        p_u = eq.p_u * shrink
    alloc = PowerAllocation(p_p=p_p, p_u=p_u)
    lam0 = 0.9 * float(np.min(sinr_all(alloc, fading, cfg)))
    x0 = {f"pu{k}": float(p_u[k]) for k in range(cfg.K)}
    if mode == JOINT:
        x0.update({f"pp{k}": float(p_p[k]) for k in range(cfg.K)})
    x0["lam"] = lam0
    return x0


def _extract_alloc(x: dict[str, float], cfg: SystemConfig, mode: str, scale: float) -> PowerAllocation:
    p_u = np.array([x[f"pu{k}"] for k in range(cfg.K)]) / scale
    if mode == JOINT:
        p_p = np.array([x[f"pp{k}"] for k in range(cfg.K)]) / scale
    else:
        p_p = np.full(cfg.K, cfg.E_max / (cfg.T * scale))
    return PowerAllocation(p_p=p_p, p_u=p_u)


def exhaust_budget_with_pilot(alloc: PowerAllocation, cfg: SystemConfig) -> PowerAllocation:
    """Spend any leftover energy on each user's own pilot.

    Raising p_p^k strictly increases SINR_k and leaves every other user's
    SINR unchanged (orthogonal pilots), so this is a pure improvement and
    makes the budget exactly active -- the Lemma-1 property interior-point
    output only satisfies to solver tolerance.
    """
    slack = np.maximum(energy_slack(alloc, cfg), 0.0)
    return PowerAllocation(p_p=alloc.p_p + slack / cfg.tau_p, p_u=alloc.p_u)


def solve_maxmin(
    fading: LargeScaleFading,
    cfg: SystemConfig,
    mode: str = JOINT,
    opts: GpSolverOptions | None = None,
) -> MaxMinSolution:
    """Globally optimal max-min SE allocation.  Raises GpSolverError on a
    non-Optimal solver status."""
    _check_mode(mode)
    fading_n, cfg_n, scale = normalize_instance(fading, cfg)
    prob = build_maxmin_gp(fading_n, cfg_n, mode)
    x0 = _initial_point(fading_n, cfg_n, mode)
    sol = solve_gp(prob, x0=x0, opts=opts)
    if sol.status != "Optimal":
        raise GpSolverError(sol)
    alloc = _extract_alloc(sol.x, cfg_n, mode, scale)
    if mode == JOINT:
        alloc = exhaust_budget_with_pilot(alloc, cfg)
    return MaxMinSolution(
        alloc=alloc,
        lam=float(sol.x["lam"]),
        report=se_report(alloc, fading, cfg),
        gp_iterations=sol.iterations,
    )


MAXMIN_UTILITY = "MaxMin"
SUM_UTILITY = "Sum"


def sweep_tau(
    fading: LargeScaleFading,
    cfg: SystemConfig,
    mode: str = JOINT,
    utility: str = MAXMIN_UTILITY,
    cap: int = 12,
) -> list[tuple[int, float]]:
    """Re-solve at tau_p in {K, ..., min(T-1, K+cap)} and report the achieved
    utility, to verify numerically that the maximizer is tau_p = K."""
    from dataclasses import replace

    from .sumse import sca_solve  # local import: sumse depends on this module

    if utility not in (MAXMIN_UTILITY, SUM_UTILITY):
        raise ValueError(f"unknown utility {utility!r}")
    out = []
    for tau in range(cfg.K, min(cfg.T - 1, cfg.K + cap) + 1):
        cfg_tau = replace(cfg, tau_p=tau)
        if utility == MAXMIN_UTILITY:
            value = solve_maxmin(fading, cfg_tau, mode).report.min_se
        else:
            value = sca_solve(fading, cfg_tau, mode).report.sum_se
        out.append((tau, float(value)))
    return out
