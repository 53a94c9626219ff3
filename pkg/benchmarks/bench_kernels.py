#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs each hot kernel at desk-scale and paper-scale shapes, checks the two
backends agree numerically, and prints a timing table. Numba compilation
happens once up front so timings reflect steady state.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from mdp_tcm import _kernels

SHAPES = {
    # (n_frames, n_visible, n_hidden, batch_size)
    "small-batch specialist": (300, 24, 8, 16),
    "desk (98-dim frames)": (3000, 98, 40, 128),
    "paper (10178-dim frames)": (400, 10178, 40, 100),
}


def time_fn(fn, *args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_cd(kernels, n, nv, nh, bs, repeat, rng):
    X = rng.random((n, nv))
    U = rng.random((n, 1, nh))
    W0 = rng.normal(0, 0.01, (nv, nh))
    results = {}
    for name, kern in kernels.items():
        W = W0.copy()
        a = np.zeros(nv)
        b = np.zeros(nh)
        results[name] = (time_fn(kern["cd_epoch"], W, a, b, X, bs, 0.01, 1, U,
                                 repeat=repeat), W)
    return results


def bench_sgd(kernels, n, nv, nh, bs, repeat, rng):
    sizes = np.array([nv, nh, nh // 2, 4], dtype=np.int64)
    X = rng.random((n, nv))
    y = rng.integers(0, 4, n)
    theta0 = rng.normal(0, 0.01, _kernels.theta_size(sizes))
    results = {}
    for name, kern in kernels.items():
        theta = theta0.copy()
        results[name] = (time_fn(kern["classifier_epoch"], theta, sizes, X, y,
                                 bs, 0.01, repeat=repeat), theta)
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    numba = _kernels.numba_kernels()
    if numba is None:
        print("numba unavailable; nothing to compare")
        return
    kernels = {"numpy": _kernels.numpy_kernels(), "numba": numba}

    # warm the JIT outside the timed region
    rng = np.random.default_rng(0)
    Xw = rng.random((64, 8))
    numba["cd_epoch"](rng.normal(0, 0.01, (8, 4)), np.zeros(8), np.zeros(4),
                      Xw, 32, 0.01, 1, rng.random((64, 1, 4)))
    sizes = np.array([8, 5, 4, 3], dtype=np.int64)
    numba["classifier_epoch"](rng.normal(0, 0.01, _kernels.theta_size(sizes)),
                              sizes, Xw, rng.integers(0, 3, 64), 32, 0.01)

    print(f"{'kernel / shape':<42} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for label, (n, nv, nh, bs) in SHAPES.items():
        rng = np.random.default_rng(1)
        cd = bench_cd(kernels, n, nv, nh, bs, args.repeat, np.random.default_rng(1))
        drift = np.max(np.abs(cd["numpy"][1] - cd["numba"][1]))
        assert drift < 1e-8, f"cd_epoch backends disagree: {drift}"
        t_np, t_nb = cd["numpy"][0], cd["numba"][0]
        print(f"{'cd_epoch ' + label:<42} {t_np:>9.4f}s {t_nb:>9.4f}s {t_np / t_nb:>8.2f}x")

        sgd = bench_sgd(kernels, n, nv, nh, bs, args.repeat, np.random.default_rng(2))
        drift = np.max(np.abs(sgd["numpy"][1] - sgd["numba"][1]))
        assert drift < 1e-8, f"classifier_epoch backends disagree: {drift}"
        t_np, t_nb = sgd["numpy"][0], sgd["numba"][0]
        print(f"{'classifier_epoch ' + label:<42} {t_np:>9.4f}s {t_nb:>9.4f}s {t_np / t_nb:>8.2f}x")


if __name__ == "__main__":
    main()
