#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-numpy fallback.

Switches ``multiwell.kernels.BACKEND`` in process, so one run prints both
columns.  Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from multiwell import Box, builtin, kernels
from multiwell.geodesic import GeodesicConfig, d_W


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if not kernels.HAVE_COMPILED:
        print("compiled backend unavailable; showing the python column only")

    rng = np.random.default_rng(0)
    wells = np.array([[-2.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    alphas = np.array([1.0, 1.5, 0.7])
    spec = ("blend", wells, alphas, 0.4, 1.2, 5.0)
    z10k = rng.normal(size=(10000, 3)) * 2.5
    nodes = rng.normal(size=(129, 3)).cumsum(axis=0)

    pot = builtin("blended-quadratic", Box((-1.0, -1.0), (1.0, 1.0)),
                  wells=[[-2.0, 0.0], [2.0, 0.0]], alphas=1.0, r=0.6)
    pts = rng.uniform(-3, 3, size=(10, 2, 2))
    cfg = GeodesicConfig(nodes=96, max_iter=1500)

    workloads = [
        ("factor values, 10k points", lambda: kernels.factor_values(spec, z10k), 1),
        ("cost+grad, 129-node polyline",
         lambda: [kernels.polyline_cost_grad(spec, nodes) for _ in range(500)], 500),
        ("well distance solve x10",
         lambda: [d_W(pot, np.zeros(2), p, q, cfg) for p, q in pts], 10),
    ]

    backends = ["python"] + (["compiled"] if kernels.HAVE_COMPILED else [])
    results = {}
    for backend in backends:
        kernels.BACKEND = backend
        for name, fn, _ in workloads:
            results[(backend, name)] = timeit(fn, args.repeats)
    kernels.BACKEND = "compiled" if kernels.HAVE_COMPILED else "python"

    width = max(len(n) for n, _, _ in workloads)
    header = f"{'workload':<{width}}  {'python':>10}"
    if kernels.HAVE_COMPILED:
        header += f"  {'compiled':>10}  {'speedup':>8}"
    print(header)
    for name, _, _ in workloads:
        line = f"{name:<{width}}  {results[('python', name)] * 1e3:9.2f}ms"
        if kernels.HAVE_COMPILED:
            fast = results[("compiled", name)]
            line += (f"  {fast * 1e3:9.2f}ms"
                     f"  {results[('python', name)] / fast:7.1f}x")
        print(line)


if __name__ == "__main__":
    main()
