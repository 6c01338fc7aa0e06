# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled evaluation of the log-space barrier objective.

Same contract as _barrier_py; see that module for the math.  This is the hot
inner loop of every Newton step, so everything is flat C loops over the
stacked constraint-term arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()


def constraint_values(double[:, ::1] A, double[::1] b, long[::1] ptr, double[::1] y):
    cdef Py_ssize_t ncons = ptr.shape[0] - 1
    cdef Py_ssize_t n = y.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(ncons)
    cdef double[::1] outv = out
    cdef Py_ssize_t i, j, r
    cdef double z, m, s
    cdef double[::1] zbuf = np.empty(A.shape[0])
    for r in range(A.shape[0]):
        z = b[r]
        for j in range(n):
            z += A[r, j] * y[j]
        zbuf[r] = z
    for i in range(ncons):
        m = -INFINITY
        for r in range(ptr[i], ptr[i + 1]):
            if zbuf[r] > m:
                m = zbuf[r]
        s = 0.0
        for r in range(ptr[i], ptr[i + 1]):
            s += exp(zbuf[r] - m)
        outv[i] = m + log(s)
    return out


def barrier_value(double[:, ::1] A, double[::1] b, long[::1] ptr,
                  double[::1] obj_grad, double t, double[::1] y):
    cdef Py_ssize_t ncons = ptr.shape[0] - 1
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t i, j, r
    cdef double z, m, s, fi
    cdef double val = 0.0
    cdef double fmax = -INFINITY
    cdef bint infeasible = 0
    for j in range(n):
        val += obj_grad[j] * y[j]
    val *= t
    cdef double[::1] zbuf = np.empty(A.shape[0])
    for r in range(A.shape[0]):
        z = b[r]
        for j in range(n):
            z += A[r, j] * y[j]
        zbuf[r] = z
    for i in range(ncons):
        m = -INFINITY
        for r in range(ptr[i], ptr[i + 1]):
            if zbuf[r] > m:
                m = zbuf[r]
        s = 0.0
        for r in range(ptr[i], ptr[i + 1]):
            s += exp(zbuf[r] - m)
        fi = m + log(s)
        if fi > fmax:
            fmax = fi
        if fi >= 0.0:
            infeasible = 1
        elif not infeasible:
            val -= log(-fi)
    if infeasible:
        return INFINITY, fmax
    return val, fmax


def barrier_full(double[:, ::1] A, double[::1] b, long[::1] ptr,
                 double[::1] obj_grad, double t, double[::1] y):
    cdef Py_ssize_t ncons = ptr.shape[0] - 1
    cdef Py_ssize_t n = y.shape[0]
    cdef cnp.ndarray[double, ndim=1] grad = np.empty(n)
    cdef cnp.ndarray[double, ndim=2] hess = np.zeros((n, n))
    cdef double[::1] gv = grad
    cdef double[:, ::1] hv = hess
    cdef double[::1] gi = np.empty(n)
    cdef double[::1] zbuf = np.empty(A.shape[0])
    cdef double[::1] wbuf = np.empty(A.shape[0])
    cdef Py_ssize_t i, j, k, r
    cdef double z, m, s, fi, w, inv, val, fmax, gj

    val = 0.0
    for j in range(n):
        gv[j] = t * obj_grad[j]
        val += obj_grad[j] * y[j]
    val *= t
    fmax = -INFINITY

    for r in range(A.shape[0]):
        z = b[r]
        for j in range(n):
            z += A[r, j] * y[j]
        zbuf[r] = z

    for i in range(ncons):
        m = -INFINITY
        for r in range(ptr[i], ptr[i + 1]):
            if zbuf[r] > m:
                m = zbuf[r]
        s = 0.0
        for r in range(ptr[i], ptr[i + 1]):
            wbuf[r] = exp(zbuf[r] - m)
            s += wbuf[r]
        fi = m + log(s)
        if fi > fmax:
            fmax = fi
        if fi >= 0.0:
            return INFINITY, grad, hess, fmax
        for j in range(n):
            gi[j] = 0.0
        for r in range(ptr[i], ptr[i + 1]):
            w = wbuf[r] / s
            wbuf[r] = w
            for j in range(n):
                gi[j] += A[r, j] * w
        inv = 1.0 / (-fi)
        val -= log(-fi)
        # hess += (A^T diag(w) A - gi gi^T)/(-fi) + gi gi^T / fi^2
        for r in range(ptr[i], ptr[i + 1]):
            w = wbuf[r] * inv
            for j in range(n):
                gj = A[r, j] * w
                if gj != 0.0:
                    for k in range(n):
                        hv[j, k] += gj * A[r, k]
        for j in range(n):
            gj = gi[j] * (inv * inv - inv)
            if gj != 0.0:
                for k in range(n):
                    hv[j, k] += gj * gi[k]
            gv[j] += gi[j] * inv
    return val, grad, hess, fmax
