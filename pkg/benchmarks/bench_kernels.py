#!/usr/bin/env python3
"""Benchmark: compiled kernels vs the pure-Python fallback.

Times the three hot paths (MCMC steps, forward construction, inverse
construction) on equilibrated configurations and prints a speedup table.

    python benchmarks/bench_kernels.py [--n 32] [--quick]
"""

import argparse
import time

import numpy as np

import hardshift as hs
from hardshift.backend import get_kernels


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--z", type=float, default=0.5)
    ap.add_argument("--quick", action="store_true",
                    help="fewer repetitions and smaller workloads")
    args = ap.parse_args()

    params = hs.derive_params(args.n, args.z, 0.5)
    boundary = hs.boundary_triangular(args.n, 2.0)
    cfg = hs.sample(params, boundary, burn_in_sweeps=400, n_samples=1,
                    thin_sweeps=1, seed=7)[0]
    trace = hs.build_forward(cfg, params, check=False)
    image = hs.apply_shift(cfg, trace, +1)
    near = boundary[np.max(np.abs(boundary), axis=1) <= args.n + 1.0]
    near = np.ascontiguousarray(near)

    n_steps = 2_000 if args.quick else 20_000
    repeats = 1 if args.quick else 3

    compiled = get_kernels("compiled")
    fallback = get_kernels("fallback")
    rows = []

    def bench_steps(kern):
        pos = np.empty((hs.sampler.chain_capacity(args.n), 2))
        pos[:cfg.count] = cfg.interior
        stats = np.zeros(6, dtype=np.int64)
        rng = np.random.Generator(np.random.PCG64(1))
        kern.run_steps(pos, cfg.count, float(args.n), args.z, near,
                       n_steps, rng, stats)

    rows.append((f"mcmc {n_steps} steps (m={cfg.count})",
                 timeit(lambda: bench_steps(compiled), repeats),
                 timeit(lambda: bench_steps(fallback), repeats)))

    rows.append((f"forward construction (m={cfg.count})",
                 timeit(lambda: compiled.forward_heap(cfg.interior, cfg.boundary,
                                                      params), repeats),
                 timeit(lambda: fallback.forward_heap(cfg.interior, cfg.boundary,
                                                      params), repeats)))

    rows.append((f"inverse construction (m={cfg.count})",
                 timeit(lambda: compiled.inverse_build(image.interior,
                                                       image.boundary, params),
                        repeats),
                 timeit(lambda: fallback.inverse_build(image.interior,
                                                       image.boundary, params),
                        repeats)))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'compiled':>10}  {'fallback':>10}  {'speedup':>8}")
    for name, tc, tf in rows:
        print(f"{name:<{width}}  {tc * 1e3:>8.2f}ms  {tf * 1e3:>8.2f}ms  "
              f"{tf / tc:>7.1f}x")

    # backends must agree bit-for-bit
    a = compiled.forward_heap(cfg.interior, cfg.boundary, params)
    b = fallback.forward_heap(cfg.interior, cfg.boundary, params)
    same = all(np.array_equal(x, y) for x, y in zip(a[:4], b[:4])) and a[4] == b[4]
    print(f"\nbackends bit-identical: {same}")


if __name__ == "__main__":
    main()
