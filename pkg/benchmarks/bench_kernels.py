"""Compare the compiled and numpy kernel backends on tree builds and queries.

    python3 benchmarks/bench_kernels.py [--n 100000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from dethpd import kernels
from dethpd.samples import SampleMatrix, estimate_truncation
from dethpd.tree import DetConfig, build_det


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tau", type=float, default=0.05)
    args = ap.parse_args()

    backends = kernels.available()
    print(f"backends: {', '.join(backends)}  n={args.n}  tau={args.tau}")
    rng = np.random.default_rng(0)
    for d in (2, 5, 10):
        S = SampleMatrix(rng.standard_normal((args.n, d)))
        rect = estimate_truncation(S).rect
        probes = rng.standard_normal((args.n, d))
        row = {}
        for name in backends:
            cfg = DetConfig(backend=name)
            t_build, tree = timed(lambda: build_det(S, rect, args.tau, cfg), args.repeat)
            t_query, _ = timed(lambda: tree.leaf_of(probes, backend=name), args.repeat)
            row[name] = (t_build, t_query, tree.n_leaves)
        for name, (tb, tq, k) in row.items():
            print(f"d={d:2d} {name:7s} build {tb:8.3f}s  query {tq:7.3f}s  leaves {k}")
        if len(row) == 2:
            (cb, cq, _), (pb, pq, _) = row["cython"], row["python"]
            print(f"d={d:2d} speedup build x{pb / cb:.1f}  query x{pq / cq:.1f}")


if __name__ == "__main__":
    main()
