#!/usr/bin/env python3
"""Times the njit and pure-numpy builds of each hot kernel side by side.

Run:
  python3 benchmarks/bench_kernels.py

The package picks the njit build by default; setting BEAMCONF_PURE_NUMPY=1
forces the numpy build everywhere. This script imports both builds directly,
so one run covers both paths.
"""

import time

import numpy as np

from beamconf import _kernels as k


def bench(label, fn, *args, repeat=5):
    fn(*args)  # warm-up, includes JIT compilation for the njit build
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    print(f"  {label:<12} {best * 1000:10.3f} ms")
    return best


def main():
    rng = np.random.default_rng(0)

    print("rank_average (n=100_000, heavy ties)")
    values = rng.integers(0, 500, 100_000).astype(np.float64)
    t_np = bench("numpy", k.rank_average_py, values)
    t_jit = bench("njit", k.rank_average_jit, values)
    print(f"  speedup      {t_np / t_jit:10.2f}x")

    print("pearson (n=100_000)")
    x, y = rng.normal(size=100_000), rng.normal(size=100_000)
    t_np = bench("numpy", k.pearson_py, x, y)
    t_jit = bench("njit", k.pearson_jit, x, y)
    print(f"  speedup      {t_np / t_jit:10.2f}x")

    print("bootstrap_rhos (n=1000, B=2000)")
    n, b = 1000, 2000
    a = rng.normal(size=n)
    c = rng.normal(size=n)
    q = rng.normal(size=n)
    idx = rng.integers(0, n, size=(b, n)).astype(np.int64)
    t_np = bench("numpy", k.bootstrap_rhos_py, a, c, q, idx, repeat=2)
    t_jit = bench("njit", k.bootstrap_rhos_jit, a, c, q, idx, repeat=2)
    print(f"  speedup      {t_np / t_jit:10.2f}x")

    print("lcs_len (300 x 300 tokens)")
    s1 = rng.integers(0, 40, 300).astype(np.int64)
    s2 = rng.integers(0, 40, 300).astype(np.int64)
    t_np = bench("python", k.lcs_len_py, s1, s2, repeat=2)
    t_jit = bench("njit", k.lcs_len_jit, s1, s2, repeat=2)
    print(f"  speedup      {t_np / t_jit:10.2f}x")


if __name__ == "__main__":
    main()
