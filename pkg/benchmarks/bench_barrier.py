"""Benchmark: compiled barrier kernel vs the NumPy fallback.

Times the three kernel entry points on a stacked constraint system sized
like the reference max-min program, plus an end-to-end solve.  Run the
pure-Python side by setting MIMOPOWER_PURE_PYTHON=1 (the backend is chosen
at import time, so the script re-executes itself for the second half).

Usage: python benchmarks/bench_barrier.py [--repeat N]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def build_system(rng, n=21, ncons=40, max_terms=22):
    sizes = rng.integers(1, max_terms + 1, ncons)
    total = int(sizes.sum())
    A = np.ascontiguousarray(rng.normal(0.0, 1.0, (total, n)))
    b = rng.normal(-3.0, 1.0, total)
    ptr = np.ascontiguousarray(np.concatenate([[0], np.cumsum(sizes)]), dtype=np.int64)
    # Shift each constraint so the origin is strictly feasible (value -0.5).
    for i in range(ncons):
        seg = slice(ptr[i], ptr[i + 1])
        lse = np.log(np.exp(b[seg]).sum())
        b[seg] -= lse + 0.5
    b = np.ascontiguousarray(b)
    obj_grad = np.ascontiguousarray(rng.normal(size=n))
    return A, b, ptr, obj_grad


def time_call(fn, repeat):
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_kernels(repeat):
    from mimopower import backend

    rng = np.random.default_rng(0)
    A, b, ptr, obj_grad = build_system(rng)
    y = np.zeros(A.shape[1])
    rows = [
        ("constraint_values", time_call(lambda: backend.constraint_values(A, b, ptr, y), repeat)),
        ("barrier_value", time_call(lambda: backend.barrier_value(A, b, ptr, obj_grad, 10.0, y), repeat)),
        ("barrier_full", time_call(lambda: backend.barrier_full(A, b, ptr, obj_grad, 10.0, y), repeat)),
    ]

    from mimopower.maxmin import solve_maxmin
    from mimopower.model import SystemConfig
    from mimopower.sim import DropConfig, compute_emax, drop_users

    drop_cfg = DropConfig(seed=7)
    fading, _ = drop_users(np.random.default_rng(7), drop_cfg, 10)
    cfg = SystemConfig(M=100, K=10, T=200, tau_p=10, E_max=compute_emax(drop_cfg, 200))
    n_solves = max(1, repeat // 200)
    rows.append(("solve_maxmin (K=10)", time_call(lambda: solve_maxmin(fading, cfg), n_solves)))

    print(f"backend: {backend.BACKEND_NAME}")
    for name, t in rows:
        print(f"  {name:<22} {t * 1e6:10.1f} us")
    return dict(rows)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=2000)
    args = parser.parse_args()

    bench_kernels(args.repeat)
    sys.stdout.flush()
    if not os.environ.get("MIMOPOWER_PURE_PYTHON"):
        env = dict(os.environ, MIMOPOWER_PURE_PYTHON="1")
        subprocess.run(
            [sys.executable, __file__, "--repeat", str(args.repeat)],
            env=env,
            check=True,
        )


if __name__ == "__main__":
    main()
