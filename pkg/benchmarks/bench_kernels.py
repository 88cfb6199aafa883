"""Kernel backend benchmark: numpy versus numba JIT.

Times the two hot kernels (residual assembly, oscillation ball scan) on
representative problem sizes and prints a table with speedups.  Run as

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from crossdiff._kernels import HAS_NUMBA, bmo_scan, residual_field


def time_call(fn, repeats=20):
    fn()  # warm-up (includes JIT compilation for the numba paths)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def model_arrays():
    d = np.array([0.05, 1.0])
    alpha = np.array([[0.1, 3.0], [0.5, 0.2]])
    r = np.array([1.0, 1.0])
    c = np.array([[1.0, 0.5], [0.3, 1.0]])
    return d, alpha, r, c


def main():
    rng = np.random.default_rng(0)
    d, alpha, r, c = model_arrays()
    cases = []

    u1 = rng.uniform(0.2, 1.8, (4096, 2))
    cases.append(
        (
            "residual 1D n=4096 m=2",
            lambda b: residual_field(u1, (1e-3,), d, alpha, r, c, 1.0, False, backend=b),
        )
    )

    u2 = rng.uniform(0.2, 1.8, (128, 128, 2))
    cases.append(
        (
            "residual 2D 128x128 m=2",
            lambda b: residual_field(
                u2, (1e-2, 1e-2), d, alpha, r, c, 1.0, False, backend=b
            ),
        )
    )

    pts = rng.uniform(0.0, np.pi, (2048, 1))
    vals = rng.uniform(0.0, 2.0, (2048, 2))
    radii = np.array([0.1, 0.2, 0.4])
    cases.append(
        (
            "bmo scan n=2048 m=2 radii=3",
            lambda b: bmo_scan(vals, pts, radii, backend=b),
        )
    )

    if not HAS_NUMBA:
        print("numba not importable: timing the numpy backend only")

    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, call in cases:
        t_np = time_call(lambda: call("numpy"))
        if HAS_NUMBA:
            t_nb = time_call(lambda: call("numba"))
            print(
                f"{name:<28}{t_np * 1e3:>10.3f}ms{t_nb * 1e3:>10.3f}ms"
                f"{t_np / t_nb:>9.1f}x"
            )
        else:
            print(f"{name:<28}{t_np * 1e3:>10.3f}ms{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
