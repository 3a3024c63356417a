"""Benchmark the wide-stencil sweep kernel: compiled extension vs pure NumPy.

Usage:
    python benchmarks/bench_sweep.py [--h H] [--m M] [--sweeps N]
"""

import argparse
import math
import time

import numpy as np

from lmce import _sweep_py
from lmce.geometry import BoundaryData, DomainSpec, build_grid
from lmce.stencils import StencilSet

try:
    from lmce import _sweep as _sweep_ext
except ImportError:
    _sweep_ext = None


def _bench(impl, u0, st, c, sweeps, repeats=3):
    best = math.inf
    args = (st.idx, st.w, st.const, st.centerw)
    for _ in range(repeats):
        u = np.ascontiguousarray(u0)
        t0 = time.perf_counter()
        impl.sweep_block(u, st.tau, c, *args, sweeps, 0.0)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=1 / 32)
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--sweeps", type=int, default=500)
    args = ap.parse_args()

    disk = DomainSpec("disk", (0.0, 0.0), (1.0, 1.0))
    grid = build_grid(disk, args.h)
    phi = BoundaryData(disk, lambda x, y: x**2 - y**2, smoothness="C4")
    st = StencilSet.build(grid, phi, m=args.m)
    u0 = np.zeros(grid.n_nodes)

    print(f"grid h={args.h} nodes={grid.n_nodes} directions={args.m} sweeps={args.sweeps}")
    t_py = _bench(_sweep_py, u0, st, 0.0, args.sweeps)
    rate_py = args.sweeps / t_py
    print(f"  numpy  : {t_py:8.3f} s  ({rate_py:8.1f} sweeps/s)")
    if _sweep_ext is None:
        print("  cython : extension not built (pip install -e . rebuilds it)")
        return
    t_cy = _bench(_sweep_ext, u0, st, 0.0, args.sweeps)
    rate_cy = args.sweeps / t_cy
    print(f"  cython : {t_cy:8.3f} s  ({rate_cy:8.1f} sweeps/s)")
    print(f"  speedup: {t_py / t_cy:.1f}x")

    # the two kernels must agree
    args_k = (st.idx, st.w, st.const, st.centerw)
    u_py, n_py, _ = _sweep_py.sweep_block(u0, st.tau, 0.0, *args_k, 50, 0.0)
    u_cy, n_cy, _ = _sweep_ext.sweep_block(u0, st.tau, 0.0, *args_k, 50, 0.0)
    assert n_py == n_cy
    print(f"  parity : max |u_numpy - u_cython| = {np.abs(u_py - u_cy).max():.2e} after 50 sweeps")


if __name__ == "__main__":
    main()
