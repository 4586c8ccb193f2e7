"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

Numba timings exclude the first (compiling) call, which is reported separately.
"""
import argparse
import time

import numpy as np

from etkfsim import kernels
from etkfsim.graph import laplacian, ring_graph


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    m4 = rng.normal(size=(4, 4))
    lap = laplacian(ring_graph(64))
    x0 = rng.uniform(40, 56, 64)
    xdot = np.zeros(64)
    samples = np.cumsum(rng.normal(0, 0.05, size=(3000, 16)), axis=0)
    deltas = np.full(16, 0.1)
    return [
        ("expm 4x4 (x1000)",
         lambda: [kernels.expm_nb(m4) for _ in range(1000)],
         lambda: [kernels.expm_np(m4) for _ in range(1000)]),
        ("euler consensus n=64, 3000 steps",
         lambda: kernels.euler_consensus_nb(lap, x0, xdot, 0.01, 3000),
         lambda: kernels.euler_consensus_np(lap, x0, xdot, 0.01, 3000)),
        ("sod replay 3000x16",
         lambda: kernels.sod_replay_nb(samples, deltas),
         lambda: kernels.sod_replay_np(samples, deltas)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.HAS_NUMBA:
        print("numba unavailable or disabled; the numba column runs the loop kernels as plain Python")
    print(f"{'kernel':36s} {'first nb':>10s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, nb, np_ in cases():
        t0 = time.perf_counter()
        nb()
        first = time.perf_counter() - t0
        t_nb, t_np = best_of(nb, args.repeat), best_of(np_, args.repeat)
        print(f"{name:36s} {first:10.4f} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
