"""Monte Carlo campaign: random user drops, the five power-control schemes,
and empirical CDF statistics.

Units are edge-normalized: beta_k = (R / r_k)^gamma so that the cell-edge
coefficient is 1, and E_max = edge_snr * T.  The SINR expression is invariant
under this joint rescaling of (beta, powers), so the results are identical to
raw path-loss units while keeping magnitudes sane.

Reproducibility: drop d uses the d-th child of numpy's SeedSequence(seed)
(spawned streams are independent and parallel-safe), so campaign output is a
pure function of (seed, config) regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .gp import GpSolverError
from .maxmin import DATA_ONLY, JOINT, solve_maxmin
from .model import (
    LargeScaleFading,
    PowerAllocation,
    SystemConfig,
    energy_slack,
    equal_power_allocation,
    se_report,
)
from .sumse import sca_solve

MAXMIN_JOINT = "MaxMinJoint"
SUM_JOINT = "SumJoint"
NO_CONTROL = "NoControl"
MAXMIN_DATA = "MaxMinDataOnly"
SUM_DATA = "SumDataOnly"

ALL_SCHEMES = (MAXMIN_JOINT, SUM_JOINT, NO_CONTROL, MAXMIN_DATA, SUM_DATA)

# Schemes whose optimum provably spends the full budget on every user
# (Lemma-1 argument needs the pilot power to be free).
JOINT_SCHEMES = (MAXMIN_JOINT, SUM_JOINT)


class CampaignError(RuntimeError):
    """Too many failed drops to report paired statistics."""


@dataclass(frozen=True)
class DropConfig:
    cell_radius: float = 500.0
    min_distance: float = 100.0
    pathloss_exponent: float = 3.76
    num_drops: int = 1000
    seed: int = 1
    edge_snr_linear: float = 0.1  # -10 dB at the cell edge under equal power

    def __post_init__(self):
        if not (0 < self.min_distance < self.cell_radius):
            raise ValueError("need 0 < min_distance < cell_radius")
        if self.pathloss_exponent <= 2:
            raise ValueError("pathloss_exponent must be > 2")
        if self.num_drops < 1:
            raise ValueError("num_drops must be >= 1")
        if self.edge_snr_linear <= 0:
            raise ValueError("edge_snr_linear must be positive")


@dataclass(frozen=True)
class DropRecord:
    drop: int
    se: np.ndarray
    sinr: np.ndarray
    p_p: np.ndarray
    p_u: np.ndarray
    sum_se: float
    min_se: float
    diagnostics: dict


@dataclass(frozen=True)
class SchemeResult:
    scheme: str
    records: list[DropRecord]


def drop_users(rng: np.random.Generator, drop_cfg: DropConfig, K: int):
    """Drop K users uniformly over the annulus area; returns (fading, distances).

    Inverse-CDF sampling: r = sqrt(u*(R^2 - rmin^2) + rmin^2).  Coefficients
    are edge-normalized, beta_k = (R / r_k)^gamma.
    """
    u = rng.random(K)
    r = np.sqrt(u * (drop_cfg.cell_radius**2 - drop_cfg.min_distance**2) + drop_cfg.min_distance**2)
    beta = (drop_cfg.cell_radius / r) ** drop_cfg.pathloss_exponent
    return LargeScaleFading(beta=beta), r


def compute_emax(drop_cfg: DropConfig, T: int) -> float:
    """Per-user energy budget in edge-normalized units: edge_snr * T.

    (In raw path-loss units this is edge_snr * R^gamma * T; the two give
    identical SINRs because only products beta*p enter the model.)
    """
    return drop_cfg.edge_snr_linear * T


def _run_drop(args):
    drop_index, child_seed, drop_cfg, M, K, T, schemes = args
    rng = np.random.default_rng(child_seed)
    fading, r = drop_users(rng, drop_cfg, K)
    cfg = SystemConfig(M=M, K=K, T=T, tau_p=K, E_max=compute_emax(drop_cfg, T))
    out = {}
    try:
        for scheme in schemes:
            diagnostics = {}
            if scheme == NO_CONTROL:
                alloc = equal_power_allocation(cfg)
            elif scheme in (MAXMIN_JOINT, MAXMIN_DATA):
                mode = JOINT if scheme == MAXMIN_JOINT else DATA_ONLY
                sol = solve_maxmin(fading, cfg, mode)
                alloc = sol.alloc
                diagnostics = {"gp_iterations": sol.gp_iterations}
            else:
                mode = JOINT if scheme == SUM_JOINT else DATA_ONLY
                sol = sca_solve(fading, cfg, mode)
                alloc = sol.alloc
                trace = np.asarray(sol.objective_trace)
                diagnostics = {
                    "sca_iterations": sol.sca_iterations,
                    "sca_status": sol.status,
                    "stationarity_residual": sol.stationarity_residual,
                    "min_trace_step": float(np.min(np.diff(trace))) if trace.size > 1 else 0.0,
                }
            if scheme in JOINT_SCHEMES or scheme == NO_CONTROL:
                slack = energy_slack(alloc, cfg)
                diagnostics["max_abs_slack"] = float(np.max(np.abs(slack)))
            report = se_report(alloc, fading, cfg)
            out[scheme] = DropRecord(
                drop=drop_index,
                se=report.se,
                sinr=report.sinr,
                p_p=alloc.p_p,
                p_u=alloc.p_u,
                sum_se=report.sum_se,
                min_se=report.min_se,
                diagnostics=diagnostics,
            )
    except GpSolverError as exc:
        return drop_index, None, str(exc)
    return drop_index, out, None


def run_campaign(
    drop_cfg: DropConfig,
    M: int,
    K: int,
    T: int,
    schemes=ALL_SCHEMES,
    workers: int = 1,
    max_failure_fraction: float = 0.01,
    progress=None,
) -> list[SchemeResult]:
    """Run all schemes on num_drops shared user drops.

    Every scheme sees the same fading per drop; a drop on which any solver
    fails is excluded from all schemes to keep comparisons paired.  More
    than max_failure_fraction failed drops raises CampaignError.
    """
    for s in schemes:
        if s not in ALL_SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    children = np.random.SeedSequence(drop_cfg.seed).spawn(drop_cfg.num_drops)
    jobs = [
        (d, children[d], drop_cfg, M, K, T, tuple(schemes))
        for d in range(drop_cfg.num_drops)
    ]
    if workers > 1:
        with Pool(workers) as pool:
            raw = []
            for res in pool.imap(_run_drop, jobs, chunksize=4):
                raw.append(res)
                if progress is not None:
                    progress(len(raw), drop_cfg.num_drops)
    else:
        raw = []
        for job in jobs:
            raw.append(_run_drop(job))
            if progress is not None:
                progress(len(raw), drop_cfg.num_drops)

    raw.sort(key=lambda r: r[0])
    failures = [(d, msg) for d, out, msg in raw if out is None]
    if len(failures) > max_failure_fraction * drop_cfg.num_drops:
        raise CampaignError(f"{len(failures)}/{drop_cfg.num_drops} drops failed: {failures[:5]}")
    results = {s: SchemeResult(scheme=s, records=[]) for s in schemes}
    for d, out, _ in raw:
        if out is None:
            continue
        for s in schemes:
            results[s].records.append(out[s])
    return [results[s] for s in schemes]


@dataclass(frozen=True)
class CdfSummary:
    """Sorted samples with nearest-rank percentiles."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.values, dtype=float))
        if arr.size == 0:
            raise ValueError("empty sample")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def percentile(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"percentile level must be in [0, 1], got {p}")
        idx = max(math.ceil(p * self.values.size), 1) - 1
        return float(self.values[idx])

    @property
    def likely95(self) -> float:
        """The value exceeded with probability 0.95 (5th percentile)."""
        return self.percentile(0.05)

    @property
    def median(self) -> float:
        return self.percentile(0.5)


def empirical_cdf(values) -> CdfSummary:
    return CdfSummary(values=np.asarray(values, dtype=float))
