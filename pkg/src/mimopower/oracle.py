"""Independent verification machinery.

Brute-force grid search over pilot-energy fractions for tiny K (the full
budget is spent per user at any optimum, so one fraction per user suffices),
and Monte Carlo channel-estimation experiments that validate the moments
behind the closed-form SINR: the estimate variance gamma and the (M-1)
factor via E[1/||ghat||^2] = 1/((M-1) gamma).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    LargeScaleFading,
    PowerAllocation,
    SystemConfig,
    mmse_estimate_variance,
    se_report,
)

MAXMIN_UTILITY = "MaxMin"
SUM_UTILITY = "Sum"


@dataclass(frozen=True)
class GridSpec:
    """Per-user pilot-fraction grid, log-spaced near both edges."""

    n: int = 400
    rho_min: float = 1e-4
    rho_max: float = 1.0 - 1e-4

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("need at least 10 grid points per dimension")
        if not (0.0 < self.rho_min < self.rho_max < 1.0):
            raise ValueError("need 0 < rho_min < rho_max < 1")

    def fractions(self) -> np.ndarray:
        # both halves exclude the 0.5 endpoint so the grids nest when n
        # doubles (refinement can then only improve the optimum)
        m = self.n // 2
        lo = np.geomspace(self.rho_min, 0.5, m, endpoint=False)
        hi = 1.0 - np.geomspace(1.0 - self.rho_max, 0.5, self.n - m, endpoint=False)[::-1]
        return np.concatenate([lo, hi])


def _alloc_from_fractions(rho, cfg: SystemConfig):
    """Full-budget powers from pilot fractions: p_p = rho*E/tau, p_u = (1-rho)*E/(T-tau)."""
    p_p = rho * cfg.E_max / cfg.tau_p
    p_u = (1.0 - rho) * cfg.E_max / (cfg.T - cfg.tau_p)
    return p_p, p_u


def _grid_sinr(p_p, p_u, beta, cfg: SystemConfig):
    """SINR of every user; p_p/p_u have shape (K,) + grid_shape."""
    tau = cfg.tau_p
    bshape = (cfg.K,) + (1,) * (p_u.ndim - 1)
    b = beta.reshape(bshape)
    bp_u = b * p_u
    total = np.sum(bp_u, axis=0, keepdims=True)
    tp = tau * b * p_p
    num = (cfg.M - 1) * p_u * tp * b
    den = 1.0 + total + tp + tp * (total - bp_u)
    return num / den


def _utility_values(sinr, cfg: SystemConfig, utility: str):
    se = cfg.prefactor * np.log2(1.0 + sinr)
    if utility == MAXMIN_UTILITY:
        return np.min(se, axis=0)
    if utility == SUM_UTILITY:
        return np.sum(se, axis=0)
    raise ValueError(f"unknown utility {utility!r}")


def grid_search(
    fading: LargeScaleFading,
    cfg: SystemConfig,
    utility: str = MAXMIN_UTILITY,
    grid: GridSpec | None = None,
) -> tuple[PowerAllocation, float]:
    """Exhaustive maximum over the pilot-fraction grid (cost n^K, K <= 3)."""
    grid = grid or GridSpec()
    K = cfg.K
    if K > 3:
        raise ValueError(f"grid search is limited to K <= 3, got K={K}")
    rho = grid.fractions()
    # rho_k varies along axis k of a K-dimensional mesh
    mesh = [rho.reshape((1,) * k + (-1,) + (1,) * (K - 1 - k)) for k in range(K)]
    shape = (grid.n,) * K
    rho_full = np.stack([np.broadcast_to(m, shape) for m in mesh])
    p_p, p_u = _alloc_from_fractions(rho_full, cfg)
    values = _utility_values(_grid_sinr(p_p, p_u, fading.beta, cfg), cfg, utility)
    best = np.unravel_index(np.argmax(values), shape)
    rho_best = np.array([rho[i] for i in best])
    pp_best, pu_best = _alloc_from_fractions(rho_best, cfg)
    alloc = PowerAllocation(p_p=pp_best, p_u=pu_best)
    return alloc, float(values[best])


def grid_search_symmetric(
    fading: LargeScaleFading,
    cfg: SystemConfig,
    utility: str = MAXMIN_UTILITY,
    grid: GridSpec | None = None,
) -> tuple[PowerAllocation, float]:
    """1-D search with every user forced to the same pilot fraction (valid
    oracle for symmetric instances, any K)."""
    grid = grid or GridSpec()
    rho = grid.fractions()
    rho_full = np.broadcast_to(rho, (cfg.K, rho.size))
    p_p, p_u = _alloc_from_fractions(rho_full, cfg)
    values = _utility_values(_grid_sinr(p_p, p_u, fading.beta, cfg), cfg, utility)
    i = int(np.argmax(values))
    pp_best, pu_best = _alloc_from_fractions(np.full(cfg.K, rho[i]), cfg)
    return PowerAllocation(p_p=pp_best, p_u=pu_best), float(values[i])


@dataclass(frozen=True)
class EstimatorStats:
    gamma: float  # closed-form estimate variance
    sample_variance: float  # sample per-antenna variance of ghat
    inverse_moment_target: float  # 1/((M-1) gamma)
    sample_inverse_moment: float  # sample mean of 1/||ghat||^2
    estimate_error_correlation: float  # |corr(ghat, g - ghat)|
    num_samples: int


def validate_estimator(
    M: int,
    beta: float,
    p_p: float,
    tau_p: int,
    num_samples: int = 100_000,
    seed: int = 0,
    batch: int = 20_000,
) -> EstimatorStats:
    """Monte Carlo check of the MMSE estimator moments.

    Draws g ~ CN(0, beta I) and pilot noise CN(0, I); forms the estimate
    ghat = sqrt(tau p) beta/(1 + tau p beta) * (sqrt(tau p) g + n), and
    reports sample moments against the closed-form targets.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    gamma = mmse_estimate_variance(p_p, beta, tau_p)
    rng = np.random.default_rng(seed)

    x = tau_p * p_p
    coef = np.sqrt(x) * beta / (1.0 + x * beta)
    sum_abs2 = 0.0
    sum_inv = 0.0
    sum_cross = 0.0 + 0.0j
    sum_err2 = 0.0
    done = 0
    while done < num_samples:
        nb = min(batch, num_samples - done)
        g = (rng.standard_normal((nb, M)) + 1j * rng.standard_normal((nb, M))) * np.sqrt(beta / 2)
        n = (rng.standard_normal((nb, M)) + 1j * rng.standard_normal((nb, M))) * np.sqrt(0.5)
        ghat = coef * (np.sqrt(x) * g + n)
        err = g - ghat
        abs2 = np.abs(ghat) ** 2
        sum_abs2 += float(np.sum(abs2))
        if gamma > 0:
            sum_inv += float(np.sum(1.0 / np.sum(abs2, axis=1)))
        sum_cross += complex(np.sum(ghat * np.conj(err)))
        sum_err2 += float(np.sum(np.abs(err) ** 2))
        done += nb

    n_entries = num_samples * M
    var_hat = sum_abs2 / n_entries
    var_err = sum_err2 / n_entries
    if var_hat > 0 and var_err > 0:
        corr = abs(sum_cross / n_entries) / np.sqrt(var_hat * var_err)
    else:
        corr = 0.0
    return EstimatorStats(
        gamma=gamma,
        sample_variance=var_hat,
        inverse_moment_target=1.0 / ((M - 1) * gamma) if gamma > 0 else float("nan"),
        sample_inverse_moment=sum_inv / num_samples if gamma > 0 else float("nan"),
        estimate_error_correlation=float(corr),
        num_samples=num_samples,
    )
