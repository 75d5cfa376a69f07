"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--sizes 50 200 800] [--dim 4] [--repeat 5]

Prints one row per (function, size) with the best-of-``repeat`` wall time of
each backend and the speedup. Needs the extension built (``pip install -e .``).
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from gpopt import _pykernels

try:
    from gpopt import _ckernels
except ImportError:
    _ckernels = None


def cases(n: int, d: int, rng: np.random.Generator):
    X = rng.uniform(size=(n, d))
    W = rng.standard_normal((n, n))
    W = W + W.T
    ls = rng.uniform(0.2, 1.0, size=d)
    x = rng.uniform(size=d)
    Y = rng.uniform(size=(n, 2))
    levels = np.argsort(rng.uniform(size=(n, d)), axis=0).astype(float) + 1
    return {
        "kernel_matrix[se]": lambda k: k.kernel_matrix(X, X, ls, 1.0, 0),
        "kernel_matrix[m52]": lambda k: k.kernel_matrix(X, X, ls, 1.0, 1),
        "lengthscale_traces[m52]": lambda k: k.lengthscale_traces(X, W, ls, 1.0, 1),
        "kernel_x_grad[m52]": lambda k: k.kernel_x_grad(x, X, ls, 1.0, 1),
        "min_pairwise_distance": lambda k: k.min_pairwise_distance(levels),
        "nondominated_mask": lambda k: k.nondominated_mask(Y),
    }


def best_time(fn, backend, repeat: int) -> float:
    timer = timeit.Timer(lambda: fn(backend))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 800])
    parser.add_argument("--dim", type=int, default=4)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'function':<26}{'n':>6}{'numpy [ms]':>13}{'cython [ms]':>13}{'speedup':>9}")
    for n in args.sizes:
        for name, fn in cases(n, args.dim, rng).items():
            # both backends must agree before timing means anything
            np.testing.assert_allclose(fn(_ckernels), fn(_pykernels), rtol=1e-9, atol=1e-12)
            t_py = best_time(fn, _pykernels, args.repeat)
            t_c = best_time(fn, _ckernels, args.repeat)
            print(f"{name:<26}{n:>6}{1e3 * t_py:>13.3f}{1e3 * t_c:>13.3f}{t_py / t_c:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
