"""Parity between the compiled barrier kernel and the NumPy fallback."""

import math

import numpy as np
import pytest

from mimopower import _barrier_py, backend

try:
    from mimopower import _barrier_c
except ImportError:
    _barrier_c = None

needs_compiled = pytest.mark.skipif(
    _barrier_c is None, reason="compiled extension not built"
)


def _random_program(rng, n=6, ncons=5, max_terms=4):
    sizes = rng.integers(1, max_terms + 1, ncons)
    total = int(sizes.sum())
    A = np.ascontiguousarray(rng.normal(0.0, 1.5, (total, n)))
    b = np.ascontiguousarray(rng.normal(-2.0, 1.0, total))
    ptr = np.ascontiguousarray(np.concatenate([[0], np.cumsum(sizes)]), dtype=np.int64)
    obj_grad = np.ascontiguousarray(rng.normal(size=n))
    return A, b, ptr, obj_grad


def _feasible_point(A, b, ptr, rng, n):
    for _ in range(200):
        y = rng.normal(0.0, 0.3, n)
        f = _barrier_py.constraint_values(A, b, ptr, y)
        if f.max() < -1e-3:
            return np.ascontiguousarray(y)
    return None


def test_backend_exposes_kernel():
    assert backend.BACKEND_NAME in ("compiled", "numpy")
    assert backend.HAVE_COMPILED == (backend.BACKEND_NAME == "compiled")


@needs_compiled
def test_constraint_values_match(rng):
    for _ in range(50):
        A, b, ptr, _ = _random_program(rng)
        y = np.ascontiguousarray(rng.normal(0.0, 2.0, A.shape[1]))
        np.testing.assert_allclose(
            _barrier_c.constraint_values(A, b, ptr, y),
            _barrier_py.constraint_values(A, b, ptr, y),
            rtol=1e-13,
            atol=1e-13,
        )


@needs_compiled
def test_barrier_value_matches(rng):
    for _ in range(50):
        A, b, ptr, obj_grad = _random_program(rng)
        y = _feasible_point(A, b, ptr, rng, A.shape[1])
        if y is None:
            continue
        for t in (1.0, 1e3, 1e9):
            vc, fc = _barrier_c.barrier_value(A, b, ptr, obj_grad, t, y)
            vp, fp = _barrier_py.barrier_value(A, b, ptr, obj_grad, t, y)
            assert vc == pytest.approx(vp, rel=1e-12, abs=1e-9)
            assert fc == pytest.approx(fp, rel=1e-12, abs=1e-13)


@needs_compiled
def test_barrier_value_infeasible_point(rng):
    A, b, ptr, obj_grad = _random_program(rng)
    y = np.ascontiguousarray(np.full(A.shape[1], 50.0))  # far outside
    vc, fc = _barrier_c.barrier_value(A, b, ptr, obj_grad, 1.0, y)
    vp, fp = _barrier_py.barrier_value(A, b, ptr, obj_grad, 1.0, y)
    assert math.isinf(vc) and math.isinf(vp)
    assert fc == pytest.approx(fp, rel=1e-12)


@needs_compiled
def test_barrier_full_matches(rng):
    checked = 0
    while checked < 30:
        A, b, ptr, obj_grad = _random_program(rng)
        y = _feasible_point(A, b, ptr, rng, A.shape[1])
        if y is None:
            continue
        t = float(10 ** rng.integers(0, 8))
        vc, gc, hc, fc = _barrier_c.barrier_full(A, b, ptr, obj_grad, t, y)
        vp, gp, hp, fp = _barrier_py.barrier_full(A, b, ptr, obj_grad, t, y)
        assert vc == pytest.approx(vp, rel=1e-12, abs=1e-9)
        assert fc == pytest.approx(fp, rel=1e-12)
        np.testing.assert_allclose(np.asarray(gc), gp, rtol=1e-10, atol=1e-10 * t)
        np.testing.assert_allclose(np.asarray(hc), hp, rtol=1e-9, atol=1e-9)
        checked += 1


def test_numpy_gradient_matches_finite_differences(rng):
    A, b, ptr, obj_grad = _random_program(rng)
    y = _feasible_point(A, b, ptr, rng, A.shape[1])
    assert y is not None
    _, grad, hess, _ = _barrier_py.barrier_full(A, b, ptr, obj_grad, 10.0, y)
    h = 1e-6
    for i in range(y.size):
        yp, ym = y.copy(), y.copy()
        yp[i] += h
        ym[i] -= h
        vp, _ = _barrier_py.barrier_value(A, b, ptr, obj_grad, 10.0, yp)
        vm, _ = _barrier_py.barrier_value(A, b, ptr, obj_grad, 10.0, ym)
        assert grad[i] == pytest.approx((vp - vm) / (2 * h), rel=1e-5, abs=1e-6)
    # Hessian symmetry and PSD (sum of PSD pieces)
    np.testing.assert_allclose(hess, hess.T, rtol=0, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(hess)) >= -1e-8
