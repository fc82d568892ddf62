#!/usr/bin/env python3
"""Benchmark the hot kernels: numba-compiled vs pure-numpy fallback.

Runs each kernel pair on identical inputs and prints wall times plus the
speedup. The numpy column is what you get under DAORACLE_PURE_NUMPY=1.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from daoracle import _kernels as kn
from daoracle.codec import _csr, encode_array, generate_code

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def timed(fn, *args, repeat=5):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_peel_symbols(repeat):
    code = generate_code(256, "1/4", 8, seed=1)
    eq_ptr, eq_idx, _ = _csr(code)
    rng = np.random.default_rng(0)
    inputs = rng.integers(0, 256, size=(256, 512), dtype=np.uint8)
    sym = encode_array(code, inputs)
    known = np.ones(code.n_coded, dtype=np.bool_)
    known[rng.choice(code.n_coded, size=100, replace=False)] = False

    def run(fn):
        s, k = sym.copy(), known.copy()
        s[~k] = 0
        return fn(eq_ptr, eq_idx, s, k)

    jit = njit(cache=True)(kn._peel_symbols_impl) if HAVE_NUMBA else None
    if jit is not None:
        run(jit)  # compile before timing
    t_py, r_py = timed(run, kn._peel_symbols_impl, repeat=repeat)
    t_nb, r_nb = timed(run, jit, repeat=repeat) if jit else (float("nan"), r_py)
    assert tuple(r_py) == tuple(r_nb)
    return "peel_symbols (n=1024, 512B syms)", t_nb, t_py


def bench_peel_pattern(repeat):
    code = generate_code(256, "1/4", 8, seed=2)
    eq_ptr, eq_idx, _ = _csr(code)
    rng = np.random.default_rng(1)
    masks = rng.random((400, code.n_coded)) > 0.2

    def run(fn):
        out = 0
        for row in masks:
            out += fn(eq_ptr, eq_idx, row.copy())
        return out

    jit = njit(cache=True)(kn._peel_pattern_impl) if HAVE_NUMBA else None
    if jit is not None:
        run(jit)
    t_py, r_py = timed(run, kn._peel_pattern_numpy, repeat=repeat)
    t_nb, r_nb = timed(run, jit, repeat=repeat) if jit else (float("nan"), r_py)
    assert r_py == r_nb
    return "peel_pattern (n=1024, 400 masks)", t_nb, t_py


def bench_count_distinct(repeat):
    rng = np.random.default_rng(2)
    rows = rng.integers(0, 5000, size=(2000, 1500), dtype=np.int64)

    jit = njit(cache=True)(kn._count_distinct_impl) if HAVE_NUMBA else None
    if jit is not None:
        jit(rows[:2], 5000)
    t_py, r_py = timed(kn._count_distinct_numpy, rows, 5000, repeat=repeat)
    t_nb, r_nb = (
        timed(jit, rows, 5000, repeat=repeat) if jit else (float("nan"), r_py)
    )
    assert np.array_equal(r_py, r_nb)
    return "count_distinct (2000x1500 draws)", t_nb, t_py


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"numba available: {HAVE_NUMBA}; package path uses numba: {kn.USING_NUMBA}")
    print(f"{'kernel':<36} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for bench in (bench_peel_symbols, bench_peel_pattern, bench_count_distinct):
        name, t_nb, t_py = bench(args.repeat)
        speed = t_py / t_nb if t_nb == t_nb else float("nan")
        print(f"{name:<36} {t_nb * 1e3:>8.2f}ms {t_py * 1e3:>8.2f}ms {speed:>7.1f}x")


if __name__ == "__main__":
    main()
