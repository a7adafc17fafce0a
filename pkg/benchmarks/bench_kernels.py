"""Time the compiled and numpy kernels on tree-training sized inputs.

    python benchmarks/bench_kernels.py [--rows 500] [--features 170] [--repeat 20]
"""

import argparse
import time

import numpy as np

from heritage_assess import kernels
from heritage_assess.classifier.tree import presort


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=500)
    ap.add_argument("--features", type=int, default=170)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if kernels.numba_impl is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    n, d = args.rows, args.features
    X = rng.integers(0, 2, (n, d)).astype(float)
    X[:, :20] = rng.integers(1, 101, (n, 20))
    y = rng.integers(0, 3, n).astype(np.int64)
    w = np.ones(n)
    g, h = rng.normal(size=n), rng.uniform(0.1, 0.3, n)
    member = rng.random(n) < 0.7
    order = presort(X)
    feats = rng.permutation(d)[:13].astype(np.int64)
    totals = np.bincount(y[member], weights=w[member], minlength=3)
    G, H = float(g[member].sum()), float(h[member].sum())
    Q = rng.normal(size=(60, d))
    tree = (
        np.array([0, 0, 1, 0, 0], dtype=np.int64),
        np.array([50.0, 0, 0.5, 0, 0]),
        np.array([1, -1, 3, -1, -1], dtype=np.int64),
        np.array([2, -1, 4, -1, -1], dtype=np.int64),
    )

    cases = {
        "gbt_best_split": lambda m: m.gbt_best_split(X, order, member, g, h, G, H, 1.0, 1.0),
        "gini_best_split": lambda m: m.gini_best_split(X, order, member, y, w, feats, totals, 3),
        "minkowski_distances": lambda m: m.minkowski_distances(Q, X, 2),
        "tree_apply": lambda m: m.tree_apply(X, *tree),
    }
    print(f"rows={n} features={d} repeat={args.repeat}")
    print(f"{'kernel':<22}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, call in cases.items():
        a = best_of(lambda: call(kernels.numba_impl), args.repeat)
        b = best_of(lambda: call(kernels.numpy_impl), args.repeat)
        print(f"{name:<22}{a * 1e3:>12.3f}{b * 1e3:>12.3f}{b / a:>10.1f}x")


if __name__ == "__main__":
    main()
