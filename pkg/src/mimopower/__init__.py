"""Joint pilot and payload power control for single-cell massive MIMO uplink.

Closed-form achievable-SE model under MRC with MMSE channel estimation, a
self-contained geometric-program solver, max-min and sum-SE optimizers, and
a Monte Carlo evaluation campaign.
"""

from .model import (
    LargeScaleFading,
    ModelError,
    PowerAllocation,
    SeReport,
    SystemConfig,
    energy_slack,
    equal_power_allocation,
    mmse_estimate_variance,
    se_report,
    sinr,
    sinr_all,
)
from .gp import (
    GpError,
    GpProblem,
    GpSolution,
    GpSolverError,
    GpSolverOptions,
    Monomial,
    Posynomial,
    evaluate,
    log_transform,
    mono,
    monomial_approximation,
    posy,
    solve_gp,
)

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "LargeScaleFading",
    "PowerAllocation",
    "SeReport",
    "ModelError",
    "mmse_estimate_variance",
    "sinr",
    "sinr_all",
    "se_report",
    "equal_power_allocation",
    "energy_slack",
    "Monomial",
    "Posynomial",
    "GpProblem",
    "GpSolution",
    "GpSolverOptions",
    "GpError",
    "GpSolverError",
    "mono",
    "posy",
    "evaluate",
    "log_transform",
    "solve_gp",
    "monomial_approximation",
]
