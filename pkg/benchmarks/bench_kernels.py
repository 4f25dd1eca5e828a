#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the four hot paths (dual solve, one profiled ratio evaluation, the
joint Newton solve, logistic IRLS) on representative problem sizes and
prints per-call timings plus the speedup.  Run directly:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from selcausal.kernels import numba_backend as nb
from selcausal.kernels import numpy_backend as npb


def _instance(n1, n0, seed=0):
    rng = np.random.default_rng(seed)
    c1 = rng.standard_normal((n1, 2)) * 0.3
    c0 = rng.standard_normal((n0, 2)) * 0.3
    w1 = 1.0 / rng.uniform(0.2, 0.8, n1)
    w0 = 1.0 / rng.uniform(0.2, 0.8, n0)
    yt1 = (rng.standard_normal(n1) * 2 + 5) * w1
    yt0 = (rng.standard_normal(n0) * 2 + 2) * w0
    return c1, yt1, w1, c0, yt0, w0


def _time(fn, reps):
    fn()  # warm up (jit compile / cache load)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    cases = []
    for n1, n0, label in ((30, 70, "n=100"), (120, 280, "n=400")):
        c1, yt1, w1, c0, yt0, w0 = _instance(n1, n0)
        g = np.column_stack([c1, yt1 - 5.0 * w1])
        mc1 = np.ascontiguousarray(c1[:, 1])
        mc0 = np.ascontiguousarray(c0[:, 1])
        phi0 = np.array([0.0, 0.0, 0.0, 0.0, 5.0])
        x = np.hstack([np.ones((n1 + n0, 1)),
                       np.random.default_rng(1).standard_normal((n1 + n0, 3))])
        t = (np.random.default_rng(2).random(n1 + n0) < 0.5).astype(float)
        cases.extend([
            (f"dual_solve      {label}", 2000,
             lambda m=g: m,
             lambda mod, m=g: mod.dual_solve(m, 1e-9, 100)),
            (f"ratio eval      {label}", 100,
             None,
             lambda mod, a=(c1, yt1, w1, c0, yt0, w0): mod.profile_mu1(
                 *a, 3.0, 5.0, 0.8, 1e-6, 1e-9, 100, 6)),
            (f"phi_newton      {label}", 2000,
             None,
             lambda mod, a=(mc1, yt1, w1, mc0, yt0, w0), p=phi0: mod.phi_newton(
                 *a, 3.0, p, 1e-9, 100)),
            (f"logistic_irls   {label}", 2000,
             None,
             lambda mod, xx=x, tt=t: mod.logistic_irls(xx, tt, 1e-8, 1e-10, 50)),
        ])

    print(f"{'kernel':28s} {'numba':>12s} {'numpy':>12s} {'speedup':>9s}")
    for name, reps, _, call in cases:
        t_nb = _time(lambda: call(nb), reps)
        t_np = _time(lambda: call(npb), reps)
        print(f"{name:28s} {t_nb * 1e6:10.1f}us {t_np * 1e6:10.1f}us "
              f"{t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
