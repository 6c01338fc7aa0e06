"""System model: configuration types and the closed-form SINR/SE expressions.

All powers and energies are noise-normalized (unit noise variance), so the
per-symbol SNR of a user is simply beta * p.  Every quantity here is a pure
function of immutable value types; nothing carries hidden state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Relative slack allowed when checking the per-user energy budget.  Interior
# point outputs are feasible only up to solver tolerance.
BUDGET_RTOL = 1e-9


class ModelError(ValueError):
    """Invalid model input (bad config, dimension mismatch, domain error)."""


@dataclass(frozen=True)
class SystemConfig:
    """Cell-level constants.

    M: BS antennas, K: users, T: coherence interval length in symbols,
    tau_p: training length in symbols, E_max: per-user energy budget per
    coherence interval (noise-normalized).
    """

    M: int
    K: int
    T: int
    tau_p: int
    E_max: float

    def __post_init__(self):
        if self.M < 2:
            raise ModelError(f"M must be >= 2, got {self.M}")
        if self.K < 1:
            raise ModelError(f"K must be >= 1, got {self.K}")
        if not (self.K <= self.tau_p <= self.T):
            raise ModelError(
                f"need K <= tau_p <= T, got K={self.K}, tau_p={self.tau_p}, T={self.T}"
            )
        if self.tau_p >= self.T:
            raise ModelError("tau_p must be < T (a data phase must exist)")
        if not (self.E_max > 0) or not np.isfinite(self.E_max):
            raise ModelError(f"E_max must be positive and finite, got {self.E_max}")

    @property
    def prefactor(self) -> float:
        """Fraction of the coherence interval used for payload: 1 - tau_p/T."""
        return 1.0 - self.tau_p / self.T


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ModelError(f"{name} must be a nonempty 1-D sequence")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LargeScaleFading:
    """Per-user path-loss coefficients beta_k (linear scale, noise-normalized)."""

    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", _frozen_array(self.beta, "beta"))
        if not np.all(np.isfinite(self.beta)) or np.any(self.beta <= 0):
            raise ModelError("every beta_k must be positive and finite")

    @property
    def K(self) -> int:
        return self.beta.size


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user pilot powers p_p and payload powers p_u (noise-normalized)."""

    p_p: np.ndarray
    p_u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_p", _frozen_array(self.p_p, "p_p"))
        object.__setattr__(self, "p_u", _frozen_array(self.p_u, "p_u"))
        if self.p_p.size != self.p_u.size:
            raise ModelError("p_p and p_u must have the same length")
        if np.any(self.p_p < 0) or np.any(self.p_u < 0):
            raise ModelError("powers must be nonnegative")
        if not np.all(np.isfinite(self.p_p)) or not np.all(np.isfinite(self.p_u)):
            raise ModelError("powers must be finite")

    @property
    def K(self) -> int:
        return self.p_p.size


@dataclass(frozen=True)
class SeReport:
    """Per-user SINR (linear) and SE (bit/s/Hz), plus sum and min SE."""

    sinr: np.ndarray
    se: np.ndarray
    sum_se: float
    min_se: float


def _check_dims(alloc: PowerAllocation, fading: LargeScaleFading, cfg: SystemConfig):
    if alloc.K != cfg.K or fading.K != cfg.K:
        raise ModelError(
            f"dimension mismatch: cfg.K={cfg.K}, alloc.K={alloc.K}, fading.K={fading.K}"
        )


def check_budget(alloc: PowerAllocation, cfg: SystemConfig, rtol: float = BUDGET_RTOL):
    """Raise unless every user respects tau_p*p_p + (T-tau_p)*p_u <= E_max."""
    used = cfg.tau_p * alloc.p_p + (cfg.T - cfg.tau_p) * alloc.p_u
    if np.any(used > cfg.E_max * (1.0 + rtol)):
        worst = float(np.max(used))
        raise ModelError(f"energy budget violated: max usage {worst} > E_max {cfg.E_max}")


def mmse_estimate_variance(p_p, beta, tau_p):
    """Variance gamma of the MMSE channel estimate per antenna.

    gamma = tau_p * p_p * beta^2 / (1 + tau_p * p_p * beta).  Accepts scalars
    or arrays (broadcast).
    """
    p_p = np.asarray(p_p, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(p_p < 0):
        raise ModelError("p_p must be nonnegative")
    if np.any(beta <= 0):
        raise ModelError("beta must be positive")
    if tau_p < 1:
        raise ModelError("tau_p must be >= 1")
    x = tau_p * p_p * beta
    out = x * beta / (1.0 + x)
    return float(out) if out.ndim == 0 else out


def sinr_all(alloc: PowerAllocation, fading: LargeScaleFading, cfg: SystemConfig) -> np.ndarray:
    """Effective uplink SINR of every user under MRC with MMSE estimates."""
    _check_dims(alloc, fading, cfg)
    beta = fading.beta
    bp_u = beta * alloc.p_u
    total_bp_u = float(np.sum(bp_u))
    tp = cfg.tau_p * alloc.p_p * beta  # tau_p * p_p^k * beta_k
    num = (cfg.M - 1) * alloc.p_u * tp * beta
    den = 1.0 + total_bp_u + tp + tp * (total_bp_u - bp_u)
    return num / den


def sinr(alloc: PowerAllocation, fading: LargeScaleFading, cfg: SystemConfig, k: int) -> float:
    """SINR of user k (0-based index)."""
    if not 0 <= k < cfg.K:
        raise ModelError(f"user index {k} out of range for K={cfg.K}")
    return float(sinr_all(alloc, fading, cfg)[k])


def se_from_sinr(sinr_values: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    return cfg.prefactor * np.log2(1.0 + sinr_values)


def se_report(alloc: PowerAllocation, fading: LargeScaleFading, cfg: SystemConfig) -> SeReport:
    s = sinr_all(alloc, fading, cfg)
    se = se_from_sinr(s, cfg)
    s.flags.writeable = False
    se.flags.writeable = False
    return SeReport(sinr=s, se=se, sum_se=float(np.sum(se)), min_se=float(np.min(se)))


def equal_power_allocation(cfg: SystemConfig) -> PowerAllocation:
    """The no-control baseline: p_p = p_u = E_max/T, budget used exactly."""
    p = np.full(cfg.K, cfg.E_max / cfg.T)
    return PowerAllocation(p_p=p, p_u=p.copy())


def energy_slack(alloc: PowerAllocation, cfg: SystemConfig) -> np.ndarray:
    """Per-user unused energy E_max - tau_p*p_p - (T-tau_p)*p_u."""
    if alloc.K != cfg.K:
        raise ModelError(f"dimension mismatch: cfg.K={cfg.K}, alloc.K={alloc.K}")
    return cfg.E_max - cfg.tau_p * alloc.p_p - (cfg.T - cfg.tau_p) * alloc.p_u


def normalize_instance(fading: LargeScaleFading, cfg: SystemConfig):
    """Rescale so max_k beta_k = 1; SINR is invariant under (beta, p) -> (c*beta, p/c).

    Returns (fading', cfg', scale) where powers solved in the primed units must
    be divided by `scale` to recover the original units.
    """
    scale = float(np.max(fading.beta))
    fading_n = LargeScaleFading(beta=fading.beta / scale)
    cfg_n = replace(cfg, E_max=cfg.E_max * scale)
    return fading_n, cfg_n, scale
