"""Compiled versus pure-Python kernels.

    python benchmarks/bench_kernels.py [--scale 1.0] [--repeat 3]

Prints one row per kernel with the best-of-``repeat`` wall time of each
backend and the speed-up.
"""
import argparse
import timeit

import numpy as np

from livsiclab import _pykernels as py
from livsiclab import kernels


def cases(scale):
    n = int(200_000 * scale)
    trans = np.array([[1, 2], [1, 2], [1, 1]], dtype=np.int64)
    br = np.array([0.5])
    ys = np.linspace(1e-3, 0.999, int(20_000 * scale))
    return {
        "birkhoff_log_derivative(quadratic)": lambda m: m.birkhoff_log_derivative(kernels.QUADRATIC, 1.8, 0.3, 100, n),
        "orbit_histogram(mp p=0.5)": lambda m: m.orbit_histogram(kernels.MP, 0.5, 0.3, 100, n, 0.0, 1.0, 256),
        "mp_left_preimages(p=1)": lambda m: m.mp_left_preimages(1.0, 0.5, int(20_000 * scale)),
        "mp_left_inverse_array(p=0.5)": lambda m: m.mp_left_inverse_array(ys, 0.5),
        "hofbauer_occupation(tent)": lambda m: m.hofbauer_occupation(kernels.TENT, 1.9, trans, br, 0, 0.3, n),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="problem-size multiplier")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    c = kernels.compiled_backend
    if c is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':40s} {'cython [s]':>11s} {'python [s]':>11s} {'speed-up':>9s}")
    for name, fn in cases(args.scale).items():
        tc = min(timeit.repeat(lambda: fn(c), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        print(f"{name:40s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
