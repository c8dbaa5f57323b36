#!/usr/bin/env python3
"""Benchmark the numba-jitted quadrature kernels against the numpy fallback.

Runs the hot batched operations on realistic workloads (the same shapes the
Carleson box masses and heat sweeps produce) under both backends and prints
a table of timings, speedups, and max relative differences.

Usage:
    python benchmarks/bench_kernels.py [--points N] [--repeat K]

The backend used by the library at import time follows AINFTYLAB_NUMBA; this
script flips it explicitly, so it exercises both regardless of environment.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ainftylab import accel, kernels
from ainftylab.weights import WeightSpec


def _timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _workloads(m):
    rng = np.random.default_rng(7)
    xs = rng.uniform(-2.0, 2.0, m)
    rs = rng.uniform(0.1, 2.0, m)
    gx = np.linspace(-40.0, 40.0, 4001)
    gv = 1.0 + 0.5 * np.sin(gx) ** 2
    vt = kernels.varphi_table(1)
    E = np.empty(0)
    loads = [
        ("gauss conv, power |x|^0.3", lambda: accel.conv_batch(
            1, 0.3, 0.0, 0.0, E, E, xs, rs, accel.KERN_GAUSS, 0.0,
            kernels.GAUSS_SEG, kernels.GAUSS_WMAX)),
        ("gauss conv, plateau", lambda: accel.conv_batch(
            3, 0.2, 0.0, 1.0, E, E, xs, rs, accel.KERN_GAUSS, 0.0,
            kernels.GAUSS_SEG, kernels.GAUSS_WMAX)),
        ("bump conv, grid weight", lambda: accel.conv_batch(
            4, 0.0, 0.0, 0.0, gx, gv, xs, rs, accel.KERN_TABLE, 0.0,
            vt.seg_edges, vt.seg_wmax, vt.step, vt.values, vt.derivs)),
        ("ball masses, polypower", lambda: accel.ball_mass_batch(
            2, 0.3, -0.2, 0.0, E, E, np.tile(xs, 8), np.tile(rs, 8))),
        ("log ball means, power", lambda: accel.log_ball_mean_batch(
            1, 0.3, 0.0, 0.0, E, E, np.tile(xs, 8), np.tile(rs, 8))),
    ]
    return loads


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    try:
        accel.set_backend("numba")
        have_numba = True
    except Exception:
        have_numba = False
        print("numba unavailable; timing the numpy path only\n")

    loads = _workloads(args.points)
    if have_numba:
        # warm the JIT outside the timed region
        for _, fn in _workloads(64):
            fn()

    rows = []
    for name, fn in loads:
        accel.set_backend("numpy")
        t_np, out_np = _timed(fn, args.repeat)
        if have_numba:
            accel.set_backend("numba")
            t_nb, out_nb = _timed(fn, args.repeat)
            a = np.concatenate([np.atleast_1d(o) for o in
                                (out_np if isinstance(out_np, tuple) else (out_np,))])
            b = np.concatenate([np.atleast_1d(o) for o in
                                (out_nb if isinstance(out_nb, tuple) else (out_nb,))])
            scale = np.maximum(np.abs(a), 1e-9 * np.max(np.abs(a)) + 1e-300)
            diff = float(np.max(np.abs(a - b) / scale))
            rows.append((name, t_np, t_nb, t_np / t_nb, diff))
        else:
            rows.append((name, t_np, float("nan"), float("nan"), 0.0))

    w = max(len(r[0]) for r in rows)
    print(f"{'workload':<{w}}  {'numpy [s]':>10}  {'numba [s]':>10}  "
          f"{'speedup':>8}  {'max rel diff':>12}")
    for name, t_np, t_nb, sp, diff in rows:
        print(f"{name:<{w}}  {t_np:>10.4f}  {t_nb:>10.4f}  {sp:>8.2f}  {diff:>12.2e}")


if __name__ == "__main__":
    main()
