"""Posynomial algebra and a self-contained geometric-program solver.

A GP in standard form minimizes a monomial subject to posynomial constraints
poly(x) <= 1 over strictly positive x.  The substitution y = log x turns it
into a smooth convex program (affine objective, log-sum-exp constraints),
which we solve with a primal barrier method: damped Newton centering with
backtracking line search, barrier parameter multiplied by mu per outer
iteration.  Optimality is certified by the barrier duality gap
(#constraints / t).

Also provides the single-condensation operator used by the successive
convex approximation loop: the best monomial lower bound of a posynomial at
an expansion point (weights m_i(x0)/g(x0)), which is tangent there.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from . import backend


class GpError(ValueError):
    """Malformed monomial/posynomial/problem or evaluation domain error."""


class GpSolverError(RuntimeError):
    """Solve finished without an Optimal certificate."""

    def __init__(self, solution: "GpSolution"):
        super().__init__(f"GP solve failed with status {solution.status}")
        self.solution = solution


@dataclass(frozen=True)
class Monomial:
    """c * prod_i x_i^{a_i} with c > 0.  Zero exponents are dropped."""

    coeff: float
    exponents: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.coeff > 0) or not math.isfinite(self.coeff):
            raise GpError(f"monomial coefficient must be positive, got {self.coeff}")
        object.__setattr__(
            self, "exponents", {v: float(a) for v, a in self.exponents.items() if a != 0.0}
        )

    def value(self, x: Mapping[str, float]) -> float:
        out = math.log(self.coeff)
        for v, a in self.exponents.items():
            xv = x[v]
            if not xv > 0:
                raise GpError(f"variable {v} must be positive, got {xv}")
            out += a * math.log(xv)
        return math.exp(out)

    def __mul__(self, other):
        if isinstance(other, Monomial):
            exps = dict(self.exponents)
            for v, a in other.exponents.items():
                exps[v] = exps.get(v, 0.0) + a
            return Monomial(self.coeff * other.coeff, exps)
        return Monomial(self.coeff * float(other), self.exponents)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            return self * other ** -1
        return Monomial(self.coeff / float(other), self.exponents)

    def __pow__(self, a: float):
        return Monomial(self.coeff**a, {v: e * a for v, e in self.exponents.items()})

    def variables(self) -> set[str]:
        return set(self.exponents)


def mono(coeff: float = 1.0, **exponents: float) -> Monomial:
    """Shorthand constructor: mono(2, x=1, y=-1) is 2*x/y."""
    return Monomial(coeff, exponents)


@dataclass(frozen=True)
class Posynomial:
    """Nonempty sum of monomials; positive at every positive point."""

    terms: tuple[Monomial, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise GpError("posynomial needs at least one term")
        object.__setattr__(self, "terms", terms)

    def value(self, x: Mapping[str, float]) -> float:
        return sum(t.value(x) for t in self.terms)

    def __add__(self, other):
        if isinstance(other, Posynomial):
            return Posynomial(self.terms + other.terms)
        if isinstance(other, Monomial):
            return Posynomial(self.terms + (other,))
        return Posynomial(self.terms + (Monomial(float(other)),))

    __radd__ = __add__

    def __mul__(self, other: Monomial):
        if not isinstance(other, Monomial):
            other = Monomial(float(other))
        return Posynomial(tuple(t * other for t in self.terms))

    __rmul__ = __mul__

    def variables(self) -> set[str]:
        out: set[str] = set()
        for t in self.terms:
            out |= t.variables()
        return out


def posy(*terms) -> Posynomial:
    """Build a posynomial from monomials and/or positive constants."""
    out = []
    for t in terms:
        out.append(t if isinstance(t, Monomial) else Monomial(float(t)))
    return Posynomial(tuple(out))


def evaluate(p, x: Mapping[str, float]) -> float:
    """Value of a Monomial or Posynomial at a strictly positive point."""
    for v, xv in x.items():
        if not xv > 0:
            raise GpError(f"variable {v} must be positive, got {xv}")
    return p.value(x)


@dataclass(frozen=True)
class GpProblem:
    """minimize objective (monomial) s.t. every constraint posynomial <= 1.

    Optional per-variable positive bounds are encoded as extra monomial
    constraints (x/hi <= 1, lo/x <= 1) during the log transform.
    """

    objective: Monomial
    constraints: tuple[Posynomial, ...]
    bounds: Mapping[str, tuple[float | None, float | None]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "bounds", dict(self.bounds))

    def variables(self) -> tuple[str, ...]:
        names = self.objective.variables()
        for c in self.constraints:
            names |= c.variables()
        names |= set(self.bounds)
        return tuple(sorted(names))


@dataclass(frozen=True)
class GpSolution:
    x: dict[str, float]
    objective_value: float
    status: str  # "Optimal" | "Infeasible" | "MaxIterations"
    iterations: int
    max_constraint_violation: float


@dataclass(frozen=True)
class GpSolverOptions:
    t0: float = 1.0
    mu: float = 10.0
    gap_tol: float = 1e-9  # stop when #constraints / t <= gap_tol
    newton_tol: float = 1e-9  # centering target: newton decrement^2 / 2
    loose_tol: float = 1e-5  # decrement^2/2 still accepted as "centered" when
    # rounding stalls the search; the certified gap then only grows by a
    # factor (1 + sqrt(2*loose_tol))
    max_newton: int = 400  # total Newton steps across all centerings
    center_steps: int = 50  # Newton steps per barrier value of t
    alpha: float = 0.25
    beta: float = 0.5
    feas_tol: float = 1e-8


@dataclass(frozen=True)
class LogProgram:
    """The exact log-space form: minimize c . y s.t. lse_i(A y + b) <= 0."""

    variables: tuple[str, ...]
    obj_grad: np.ndarray  # objective exponents (affine slope); constant log-coeff separate
    obj_const: float
    A: np.ndarray  # (total terms, n) exponents, rows grouped by constraint
    b: np.ndarray  # log coefficients per term
    ptr: np.ndarray  # (ncons + 1,) row pointers

    @property
    def ncons(self) -> int:
        return self.ptr.size - 1

    def constraint_values(self, y: np.ndarray) -> np.ndarray:
        return backend.constraint_values(self.A, self.b, self.ptr, np.ascontiguousarray(y))

    def constraint_value(self, i: int, y: np.ndarray) -> float:
        return float(self.constraint_values(y)[i])

    def constraint_grad(self, i: int, y: np.ndarray) -> np.ndarray:
        lo, hi = self.ptr[i], self.ptr[i + 1]
        z = self.A[lo:hi] @ y + self.b[lo:hi]
        w = np.exp(z - z.max())
        w /= w.sum()
        return self.A[lo:hi].T @ w

    def objective_value(self, y: np.ndarray) -> float:
        """Log of the original monomial objective at x = exp(y)."""
        return self.obj_const + float(self.obj_grad @ y)


def log_transform(prob: GpProblem) -> LogProgram:
    """Exact convexification of a standard-form GP via y = log x."""
    names = prob.variables()
    index = {v: i for i, v in enumerate(names)}
    n = len(names)

    rows, logs, ptr = [], [], [0]

    def add_posynomial(p: Posynomial, extra: Monomial | None = None):
        for t in p.terms:
            m = t if extra is None else t * extra
            row = np.zeros(n)
            for v, a in m.exponents.items():
                row[index[v]] = a
            rows.append(row)
            logs.append(math.log(m.coeff))
        ptr.append(len(rows))

    for c in prob.constraints:
        add_posynomial(c)
    for v, (lo, hi) in prob.bounds.items():
        if hi is not None:
            add_posynomial(Posynomial((Monomial(1.0 / hi, {v: 1.0}),)))
        if lo is not None and lo > 0:
            add_posynomial(Posynomial((Monomial(lo, {v: -1.0}),)))

    obj_grad = np.zeros(n)
    for v, a in prob.objective.exponents.items():
        obj_grad[index[v]] = a

    A = np.ascontiguousarray(np.array(rows) if rows else np.zeros((0, n)))
    return LogProgram(
        variables=names,
        obj_grad=obj_grad,
        obj_const=math.log(prob.objective.coeff),
        A=A,
        b=np.ascontiguousarray(logs, dtype=float),
        ptr=np.ascontiguousarray(ptr, dtype=np.int64),
    )


def _newton_solve(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve H d = -g, adding a small ridge if H is not numerically PD."""
    ridge = 0.0
    for _ in range(8):
        try:
            H = hess if ridge == 0.0 else hess + ridge * np.eye(hess.shape[0])
            c, low = scipy.linalg.cho_factor(H, check_finite=False)
            return scipy.linalg.cho_solve((c, low), -grad, check_finite=False)
        except np.linalg.LinAlgError:
            ridge = max(ridge * 10.0, 1e-10 * max(1.0, float(np.trace(hess)) / hess.shape[0]))
    return np.linalg.lstsq(hess, -grad, rcond=None)[0]


def _center(lp_A, lp_b, lp_ptr, obj_grad, t, y, opts: GpSolverOptions, budget: int):
    """Damped Newton to the analytic center for fixed t.

    Returns (y, steps, centered).  The Armijo test splits the objective into
    its affine part t*c.y (whose change along the step is computed exactly,
    avoiding the catastrophic cancellation t*c.y suffers for large t) and the
    barrier sum, evaluated with t=0.
    """
    steps = 0
    centered = False
    stalls = 0
    budget = min(budget, opts.center_steps)
    while True:
        _, grad, hess, _ = backend.barrier_full(lp_A, lp_b, lp_ptr, obj_grad, t, y)
        d = _newton_solve(hess, grad)
        lam2 = float(-grad @ d)
        if not np.isfinite(lam2) or lam2 <= 0:
            centered = lam2 > -opts.loose_tol
            break
        if lam2 / 2.0 <= opts.newton_tol:
            centered = True
            break
        if steps >= budget or stalls >= 3:
            # conditioning floor: accept the point if reasonably centered
            centered = lam2 / 2.0 <= opts.loose_tol
            break
        steps += 1
        gd = -lam2
        cd = float(obj_grad @ d)
        bar_cur, _ = backend.barrier_value(lp_A, lp_b, lp_ptr, obj_grad, 0.0, y)
        slack = 1e-12 + 1e-14 * abs(bar_cur)
        s = 1.0
        accepted = False
        for _ in range(60):
            cand = y + s * d
            bar_new, _ = backend.barrier_value(lp_A, lp_b, lp_ptr, obj_grad, 0.0, cand)
            decrease = t * s * cd + (bar_new - bar_cur)
            if decrease <= opts.alpha * s * gd + slack:
                y = cand
                accepted = True
                stalls = stalls + 1 if -decrease <= 10.0 * slack else 0
                break
            s *= opts.beta
        if not accepted:
            centered = lam2 / 2.0 <= opts.loose_tol
            break
    return y, steps, centered


def _barrier_loop(lp: LogProgram, y0: np.ndarray, opts: GpSolverOptions,
                  stop_early=None):
    """Outer barrier loop.  Returns (y, total_newton_steps, converged)."""
    y = np.ascontiguousarray(y0, dtype=float)
    m = lp.ncons
    t = opts.t0
    steps = 0
    obj_grad = np.ascontiguousarray(lp.obj_grad)
    while True:
        y, used, centered = _center(lp.A, lp.b, lp.ptr, obj_grad, t, y, opts, opts.max_newton - steps)
        steps += used
        if stop_early is not None and stop_early(y):
            return y, steps, True
        if m / t <= opts.gap_tol:
            return y, steps, True
        if steps >= opts.max_newton or not centered:
            # stalled (conditioning floor) or out of budget before target gap
            return y, steps, False
        t *= opts.mu


def _phase1(lp: LogProgram, y0: np.ndarray, opts: GpSolverOptions):
    """Find a strictly feasible y by minimizing a shared slack s over
    lse_i(A y + b) <= s.  Returns a feasible y or None."""
    n = len(lp.variables)
    A_ext = np.ascontiguousarray(np.hstack([lp.A, -np.ones((lp.A.shape[0], 1))]))
    obj = np.zeros(n + 1)
    obj[n] = 1.0
    f0 = backend.constraint_values(lp.A, lp.b, lp.ptr, np.ascontiguousarray(y0, dtype=float))
    s0 = float(np.max(f0)) + 1.0
    y_ext = np.ascontiguousarray(np.append(y0, s0))
    lp_ext = LogProgram(
        variables=lp.variables + ("_slack",),
        obj_grad=obj,
        obj_const=0.0,
        A=A_ext,
        b=lp.b,
        ptr=lp.ptr,
    )

    def feasible(y_ext):
        f = backend.constraint_values(lp.A, lp.b, lp.ptr, np.ascontiguousarray(y_ext[:n]))
        return float(np.max(f)) < -1e-8

    opts1 = GpSolverOptions(gap_tol=1e-6, max_newton=opts.max_newton)
    y_ext, _, _ = _barrier_loop(lp_ext, y_ext, opts1, stop_early=feasible)
    if feasible(y_ext):
        return y_ext[:n]
    return None


def solve_gp(prob: GpProblem, x0: Mapping[str, float] | None = None,
             opts: GpSolverOptions | None = None) -> GpSolution:
    """Solve a standard-form GP.  x0, when given, should be strictly feasible;
    otherwise (or when it is not) a phase-I subproblem looks for one."""
    opts = opts or GpSolverOptions()
    lp = log_transform(prob)
    n = len(lp.variables)

    if x0 is not None:
        y = np.array([math.log(x0[v]) for v in lp.variables])
        if float(np.max(lp.constraint_values(y))) >= 0.0:
            y = None  # fall through to phase I
    else:
        y = None
    if y is None:
        y = _phase1(lp, np.zeros(n), opts)
        if y is None:
            empty = {v: math.nan for v in lp.variables}
            return GpSolution(empty, math.nan, "Infeasible", 0, math.inf)

    y, steps, converged = _barrier_loop(lp, y, opts)

    x = {v: math.exp(yv) for v, yv in zip(lp.variables, y)}
    violation = float(np.max(np.expm1(lp.constraint_values(y)))) if lp.ncons else 0.0
    status = "Optimal" if (converged and violation <= opts.feas_tol) else "MaxIterations"
    return GpSolution(
        x=x,
        objective_value=math.exp(lp.objective_value(y)),
        status=status,
        iterations=steps,
        max_constraint_violation=violation,
    )


def monomial_approximation(g: Posynomial, x0: Mapping[str, float]) -> Monomial:
    """Best monomial lower bound of g at x0.

    With weights a_i = m_i(x0)/g(x0), gtilde(x) = prod_i (m_i(x)/a_i)^{a_i}
    satisfies gtilde <= g everywhere, with equality and matching gradient at
    x0 (the three conditions the convex-approximation loop needs).
    """
    vals = np.array([evaluate(t, x0) for t in g.terms])
    total = float(vals.sum())
    alphas = vals / total
    coeff_log = 0.0
    exps: dict[str, float] = {}
    for t, a in zip(g.terms, alphas):
        if a < 1e-300:
            warnings.warn("dropping zero-weight term in monomial approximation")
            continue
        coeff_log += a * (math.log(t.coeff) - math.log(a))
        for v, e in t.exponents.items():
            exps[v] = exps.get(v, 0.0) + a * e
    return Monomial(math.exp(coeff_log), exps)
