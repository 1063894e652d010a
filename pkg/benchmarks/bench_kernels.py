#!/usr/bin/env python3
"""Benchmark the compiled convolution/pooling kernels against the numpy
fallback on shapes representative of this pipeline (small grids, few
filters, float64).

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vizpipe.cnn import kernels_numpy  # noqa: E402

try:
    from vizpipe.cnn import _convext
except ImportError:
    _convext = None

# (label, batch, H, W, C, filters, kernel)
CONV_CASES = [
    ("desk 4x4x3 conv8k3", 32, 4, 4, 3, 8, 3),
    ("mid 10x10x3 conv8k3", 32, 10, 10, 3, 8, 3),
    ("awid 14x14x3 conv8k3", 32, 14, 14, 3, 8, 3),
    ("deep 6x6x8 conv16k3", 32, 6, 6, 8, 16, 3),
]

POOL_CASES = [
    ("pool 12x12x8 w2s2", 32, 12, 12, 8, 2, 2),
    ("pool 6x6x16 w2s2", 32, 6, 6, 16, 2, 2),
]


def timeit(fn, repeats: int) -> float:
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run(repeats: int) -> None:
    if _convext is None:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
    backends = [("numpy", kernels_numpy)] + ([("cython", _convext)] if _convext else [])
    rng = np.random.default_rng(0)
    header = f"{'case':<28}" + "".join(f"{name:>12}" for name, _ in backends)
    if _convext:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for label, n, h, w, c, f, k in CONV_CASES:
        x = rng.normal(size=(n, h, w, c))
        wt = rng.normal(size=(k, k, c, f))
        b = rng.normal(size=f)
        h2 = h - k + 1
        dout = rng.normal(size=(n, h2, h2, f))
        for op, make in (
            ("fwd", lambda impl: (lambda: impl.conv2d(x, wt, b, 1))),
            ("bwd", lambda impl: (lambda: impl.conv2d_grad(x, wt, 1, dout))),
        ):
            times = [timeit(make(impl), repeats) for _, impl in backends]
            row = f"{label + ' ' + op:<28}" + "".join(f"{t * 1e6:>10.0f}us" for t in times)
            if len(times) == 2:
                row += f"{times[0] / times[1]:>9.1f}x"
            print(row)

    for label, n, h, w, c, win, stride in POOL_CASES:
        x = rng.normal(size=(n, h, w, c))
        times = [
            timeit(lambda impl=impl: impl.maxpool2d(x, win, stride), repeats)
            for _, impl in backends
        ]
        row = f"{label:<28}" + "".join(f"{t * 1e6:>10.0f}us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    if _convext:
        x = rng.normal(size=(16, 8, 8, 3))
        wt = rng.normal(size=(3, 3, 3, 4))
        b = rng.normal(size=4)
        a = kernels_numpy.conv2d(x, wt, b, 1)
        c2 = _convext.conv2d(x, wt, b, 1)
        print(f"\ncross-backend max abs diff: {np.abs(a - c2).max():.3e}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=30)
    run(parser.parse_args().repeats)
