"""Time the lasso homotopy kernel with numba against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--knots 100 200] [--repeat 5]

Both paths solve the same Gram system built from a first-order HAL basis;
the script also reports the largest coefficient difference between them.
"""
import argparse
import time

import numpy as np

from surrogate_cara.hal import build_basis
from surrogate_cara.hal._kernels import lasso_path
from surrogate_cara.hal.fit import default_grid, lambda_max


def gram(n, knots, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-4, 4, (n, 1))
    y = np.tanh(w[:, 0]) + rng.normal(size=n)
    X = build_basis(w, order=1, cap=knots).evaluate(w)
    Xc = X - X.mean(0)
    yc = y - y.mean()
    return Xc.T @ Xc / n, Xc.T @ yc / n


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--knots", type=int, nargs="+", default=[50, 100, 200])
    p.add_argument("--lambdas", type=int, default=50)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    print(f"{'knots':>6} {'kinks':>6} {'numba_ms':>10} {'numpy_ms':>10} {'speedup':>8} {'max_diff':>10}")
    for knots in args.knots:
        G, c = gram(args.n, knots, seed=knots)
        lams = default_grid(lambda_max(c), args.lambdas)
        lasso_path(G, c, lams, use_numba=True)  # compile outside the timed region
        t_nb, (b_nb, kinks, _) = best_of(lambda: lasso_path(G, c, lams, use_numba=True), args.repeat)
        t_np, (b_np, _, _) = best_of(lambda: lasso_path(G, c, lams, use_numba=False), args.repeat)
        diff = float(np.max(np.abs(b_nb - b_np)))
        print(f"{knots:>6} {kinks:>6} {1e3 * t_nb:>10.2f} {1e3 * t_np:>10.2f} "
              f"{t_np / t_nb:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
