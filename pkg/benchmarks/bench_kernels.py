"""Time the compiled kernels against the NumPy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, the speedup,
and whether both backends return the same result.
"""
import argparse
import timeit

import numpy as np

from causeg import kernels


def cases(n, d, k, seed=0):
    gen = np.random.default_rng(seed)
    X = gen.random((n, d))
    C = gen.random((k, d))
    labels = gen.integers(0, k, n)
    y = gen.normal(size=n)
    t = gen.integers(0, 2, n)
    return {
        "nearest_centroid": lambda m: m.nearest_centroid(X, C),
        "centroid_sums": lambda m: m.centroid_sums(X, labels, k),
        "qini_prefix": lambda m: m.qini_prefix(y, t),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-9)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    found = kernels.backends()
    if "cython" not in found:
        print("compiled extension not built; only the python backend is available")
    names = sorted(found)
    print(f"n={args.n} d={args.d} k={args.k}, best of {args.repeat}, default backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}" + "".join(f"{b + ' (ms)':>16}" for b in names) + f"{'speedup':>10}{'agree':>8}")
    for kernel, call in cases(args.n, args.d, args.k).items():
        times = {b: min(timeit.repeat(lambda: call(found[b]), number=1, repeat=args.repeat)) for b in names}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        agree = same(call(found["python"]), call(found[names[-1]]))
        row = "".join(f"{1e3 * times[b]:>16.2f}" for b in names)
        print(f"{kernel:<18}{row}{speed:>9.1f}x{str(agree):>8}")


if __name__ == "__main__":
    main()
