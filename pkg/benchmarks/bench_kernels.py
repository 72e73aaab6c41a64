"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--sizes 200 500 1000] [--repeat 5]

Prints the best-of-``repeat`` wall time per operation and backend, plus the
speedup of the compiled core over the numpy fallback.
"""
import argparse
import time

import numpy as np

from mixkern import _backend
from mixkern.gp import Objective
from mixkern.kernels import _POLY, Matern, Mixture, Separable, gram_matrix

MIX = Mixture((0.1, 0.3, 0.6), (Matern(16, 4, 0.5), Matern(4, 2, 1.5), Matern(1, 1, 2.5)))
SEP = Separable([[5.0, 1.0], [1.0, 5.0]], Matern(10, 1, 0.5))


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(n, rng):
    X = np.sort(rng.uniform(-10, 10, n))[:, None]
    y = rng.normal(size=n)
    y2 = rng.normal(size=(n, 2))
    D = _backend.sym_distances(X)
    W = rng.normal(size=(n, n))
    W = W + W.T
    pcoef, qcoef = _POLY[2.5]
    mix_obj = Objective(X, y, 0.1)
    sep_obj = Objective(X, y2, 0.5, kron=True, m=2)
    return {
        "distances": lambda: _backend.sym_distances(X),
        "matern_unit": lambda: _backend.matern_unit(D, 1.0, pcoef, qcoef, True),
        "matern_wdots": lambda: _backend.matern_wdots(D, W, 1.0, pcoef, qcoef),
        "gram_mixture": lambda: gram_matrix(MIX, X),
        "lml_grad_mixture": lambda: mix_obj(MIX),
        "lml_grad_separable": lambda: sep_obj(SEP),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 500, 1000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = _backend.available()
    print(f"backends: {', '.join(backends)}")
    header = f"{'n':>6} {'operation':<20}" + "".join(f"{b + ' ms':>12}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for n in args.sizes:
        rng = np.random.default_rng(n)
        timings = {}
        for b in backends:
            previous = _backend.use(b)
            try:
                for name, fn in cases(n, rng).items():
                    timings.setdefault(name, {})[b] = best_time(fn, args.repeat)
            finally:
                _backend.use(previous)
            rng = np.random.default_rng(n)
        for name, t in timings.items():
            line = f"{n:>6} {name:<20}" + "".join(f"{1e3 * t[b]:>12.2f}" for b in backends)
            if len(backends) > 1:
                line += f"{t['python'] / t['cython']:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()
