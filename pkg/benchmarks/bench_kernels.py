"""Numba vs pure-numpy timings for the hot kernels and one full solver cycle.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--cycles 2]

The first numba call triggers compilation (or a cache load); it is timed
separately and excluded from the steady-state numbers.
"""

import argparse
import time

import numpy as np

from risbeam import _kernels
from risbeam.operators import ris_operators
from risbeam.pattern import build_desired, rescale, two_beam_boxes
from risbeam.scene import SceneConfig
from risbeam.solver import SolverOptions, reference_height, run_bcd
from risbeam.verify import random_hermitian


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_cd(repeat, n=101, sweeps=50):
    rng = np.random.default_rng(0)
    B = random_hermitian(rng, n)
    z0 = np.exp(2j * np.pi * rng.random(n))
    t0 = time.perf_counter()
    _kernels.cd_unit_modulus(B, z0, 1, 0.0, use_numba=True)
    warm = time.perf_counter() - t0
    run = {nb: best_of(lambda: _kernels.cd_unit_modulus(B, z0, sweeps, 0.0, use_numba=nb), repeat)
           for nb in (True, False)}
    return f"cd_unit_modulus (n={n}, {sweeps} sweeps)", warm, run


def bench_herm(repeat, K=64, M=100):
    rng = np.random.default_rng(1)
    G = rng.normal(size=(K, M, M)) + 1j * rng.normal(size=(K, M, M))
    R = G @ np.conj(np.swapaxes(G, 1, 2))
    u = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
    t0 = time.perf_counter()
    _kernels.herm_quadratic(R, u, use_numba=True)
    warm = time.perf_counter() - t0
    run = {nb: best_of(lambda: _kernels.herm_quadratic(R, u, use_numba=nb), repeat)
           for nb in (True, False)}
    return f"herm_quadratic (K={K}, M={M})", warm, run


def bench_cycle(cycles):
    cfg = SceneConfig()
    ops = ris_operators(cfg)
    pattern = build_desired(two_beam_boxes(cfg.bandwidth), ops.grid)
    pattern = rescale(pattern, 0.2 * reference_height(ops, pattern))
    opts = SolverOptions(max_outer_iterations=cycles, tol=1e-300, init="feed")
    run = {}
    saved = _kernels.USE_NUMBA
    try:
        for nb in (True, False):
            _kernels.USE_NUMBA = nb
            run[nb] = run_bcd(ops, pattern, opts).wall_time / cycles
    finally:
        _kernels.USE_NUMBA = saved
    return "BCD cycle, reference scene", float("nan"), run


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--cycles", type=int, default=2)
    args = p.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':42s} {'first call':>11s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, warm, run in (bench_cd(args.repeat), bench_herm(args.repeat),
                            bench_cycle(args.cycles)):
        first = "-" if warm != warm else f"{warm:.3f}s"
        print(f"{name:42s} {first:>11s} {run[True]:9.4f}s {run[False]:9.4f}s "
              f"{run[False] / run[True]:7.1f}x")


if __name__ == "__main__":
    main()
