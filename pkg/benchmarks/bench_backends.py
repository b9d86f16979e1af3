"""Time the compiled core against the numpy fallback on the hot kernels.

    python3 benchmarks/bench_backends.py [--repeat 5] [--size 2048]

Prints one line per kernel with the best-of-``repeat`` wall time for each
backend and the speedup. Exits with status 1 if the compiled core is not
built.
"""

import argparse
import sys
import timeit

import numpy as np

from fracvar import _fallback
from fracvar.kernels import ProcessSpec, _kernel_args

try:
    from fracvar import _core
except ImportError:
    _core = None


def cases(size):
    rng = np.random.default_rng(0)
    pts = np.linspace(1.0 / size, 1.0, size)
    path = np.concatenate([[0.0], np.cumsum(rng.standard_normal(1 << 20) * 1e-3)])
    times = np.linspace(0.0, 1.0, path.size)
    stencil = np.array([1.0, -2.0, 1.0])
    half = (path.size - 1) // 2
    for spec in (ProcessSpec.fbm(0.3), ProcessSpec.bifbm(0.6, 0.5), ProcessSpec.trifbm(0.5, 0.8), ProcessSpec.nfbm(2, 1.5)):
        args = _kernel_args(spec)
        yield f"covariance_matrix {spec.label()} n={size}", "covariance_matrix", (*args, pts)
    yield "power_increment_sum p=2 (2^20)", "power_increment_sum", (path, 2.0)
    yield "power_increment_sum p=1.5 (2^20)", "power_increment_sum", (path, 1.5)
    yield "weighted_sq_increment_sum w=-0.4 (2^20)", "weighted_sq_increment_sum", (path, times, -0.4)
    yield "stencil_sq_sum (2^19 stencils)", "stencil_sq_sum", (path, stencil, 0, 1, 2, half)


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--size", type=int, default=2048, help="covariance matrix dimension")
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled core not built; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'kernel':<52} {'cython [s]':>11} {'python [s]':>11} {'speedup':>8}")
    for label, name, call in cases(args.size):
        fast = best_of(getattr(_core, name), call, args.repeat)
        slow = best_of(getattr(_fallback, name), call, args.repeat)
        print(f"{label:<52} {fast:>11.4f} {slow:>11.4f} {slow / fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
