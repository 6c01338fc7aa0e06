"""Pure-NumPy evaluation of the log-space barrier objective.

A geometric program in log variables y has constraints
    f_i(y) = log sum_j exp(a_j . y + b_j) <= 0,
with the terms of all constraints stacked row-wise in A (exponents) and b
(log coefficients), delimited by `ptr` (CSR-style).  The barrier objective is

    phi(y) = t * (obj_grad . y) - sum_i log(-f_i(y)).

`barrier_value` returns (phi, max_i f_i); phi is +inf when infeasible.
`barrier_full` additionally returns the gradient and Hessian of phi.

The compiled twin in _barrier_c.pyx implements the identical contract.
"""

from __future__ import annotations

import numpy as np


def constraint_values(A, b, ptr, y):
    """Stable log-sum-exp value of every constraint at y."""
    z = A @ y + b
    ncons = ptr.size - 1
    out = np.empty(ncons)
    for i in range(ncons):
        zi = z[ptr[i] : ptr[i + 1]]
        m = zi.max()
        out[i] = m + np.log(np.sum(np.exp(zi - m)))
    return out


def barrier_value(A, b, ptr, obj_grad, t, y):
    f = constraint_values(A, b, ptr, y)
    fmax = float(f.max())
    if fmax >= 0.0:
        return np.inf, fmax
    val = t * float(obj_grad @ y) - float(np.sum(np.log(-f)))
    return val, fmax


def barrier_full(A, b, ptr, obj_grad, t, y):
    """Value, gradient and Hessian of the barrier objective at y."""
    n = y.size
    ncons = ptr.size - 1
    z = A @ y + b
    grad = t * obj_grad.astype(float).copy()
    hess = np.zeros((n, n))
    val = t * float(obj_grad @ y)
    fmax = -np.inf
    for i in range(ncons):
        lo, hi = ptr[i], ptr[i + 1]
        zi = z[lo:hi]
        m = zi.max()
        e = np.exp(zi - m)
        s = e.sum()
        fi = float(m + np.log(s))
        fmax = max(fmax, fi)
        if fi >= 0.0:
            return np.inf, grad, hess, fmax
        w = e / s
        Ai = A[lo:hi]
        gi = Ai.T @ w
        # Hessian of f_i: A^T diag(w) A - g g^T
        Hi = (Ai.T * w) @ Ai - np.outer(gi, gi)
        inv = 1.0 / (-fi)
        val -= np.log(-fi)
        grad += gi * inv
        hess += Hi * inv + np.outer(gi, gi) * inv * inv
    return val, grad, hess, fmax
