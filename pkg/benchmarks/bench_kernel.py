#!/usr/bin/env python3
"""Benchmark the compiled simulation kernel against the pure-Python twin.

Both kernels produce bit-identical output (asserted here on a small chunk),
so this measures the speed gap alone.

Usage:
    python benchmarks/bench_kernel.py [--n 100] [--generator counter]
"""

import argparse
import time

import numpy as np

from jbfinite import _backend
from jbfinite.moments import finite_constants
from jbfinite.rng import generator_code


def run(kernel, gen_code: int, n: int, count: int) -> float:
    k = finite_constants(n)
    lm = np.empty(count)
    alm = np.empty(count)
    sums = np.zeros(8)
    start = time.perf_counter()
    kernel.simulate_chunk(gen_code, 42, 0, n, count, k.c1, k.c2, k.c3,
                          lm, alm, sums)
    return time.perf_counter() - start


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100, help="sample size")
    parser.add_argument("--generator", choices=("counter", "mlfg1279"),
                        default="counter")
    args = parser.parse_args()
    gen = generator_code(args.generator)

    kernels = _backend.available_kernels()
    if "c" not in kernels:
        print("compiled kernel not built; benchmarking the fallback only")

    # bit parity on a small shared chunk
    k = finite_constants(args.n)
    outs = {}
    for name, kernel in kernels.items():
        lm, alm, s = np.empty(500), np.empty(500), np.zeros(8)
        kernel.simulate_chunk(gen, 7, 0, args.n, 500, k.c1, k.c2, k.c3,
                              lm, alm, s)
        outs[name] = (lm, alm)
    if len(outs) == 2:
        assert np.array_equal(outs["c"][0], outs["python"][0])
        assert np.array_equal(outs["c"][1], outs["python"][1])
        print("bit parity on 500 replications: OK")

    budget = {"c": 400_000_000, "python": 1_000_000}
    times = {}
    for name, kernel in kernels.items():
        count = max(100, budget[name] // args.n)
        elapsed = run(kernel, gen, args.n, count)
        draws = count * args.n
        times[name] = draws / elapsed
        print(f"{name:>7}: {count:>9} replications of n={args.n} "
              f"in {elapsed:7.2f} s  ({draws / elapsed / 1e6:8.2f} M draws/s)")
    if len(times) == 2:
        print(f"speedup: {times['c'] / times['python']:.0f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
