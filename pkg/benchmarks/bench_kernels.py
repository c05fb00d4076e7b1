"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel and workload with the best wall time of each
backend and the speedup. Both backends must return identical results.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from netlearn import kernels
from netlearn.game import GameParams, TIE_TOL, utility_table
from netlearn.network import DirectedNetwork, binomial_tree, complete, max_path_lengths


def random_network(rng, n, p):
    return DirectedNetwork(n, [(j, i) for j in range(1, n + 1) for i in range(1, n + 1)
                               if i != j and rng.random() < p])


def workloads():
    rng = np.random.default_rng(0)
    tree = binomial_tree(255, root_to_leaf=False)
    dense = complete(128)
    sparse = random_network(rng, 200, 0.02)
    for name, net in (("leaf-to-root tree n=255", tree), ("complete n=128", dense),
                      ("random n=200 p=0.02", sparse)):
        lmax = max_path_lengths(net)
        exits = (lmax // 2).astype(np.int64)
        args = (*net.csr_in, *net.csr_out)
        yield "arrival_table", name, lambda b, a=args, e=exits: b.arrival_table(*a, e)
        yield ("exit_curve", name,
               lambda b, a=args, e=exits, h=int(lmax[0]): b.exit_curve(*a, e, 0, h))
    small = random_network(rng, 7, 0.35)
    lmax = max_path_lengths(small)
    table = utility_table(GameParams(1.0, 1.0, 0.8), small.n, int(lmax.max(initial=0)))
    args = (*small.csr_in, *small.csr_out)
    size = int(np.prod(lmax + 1))
    yield ("nash_profiles", f"random n=7, {size} profiles",
           lambda b: b.nash_profiles(*args, lmax, table, TIE_TOL))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    compiled, python = kernels.compiled_backend, kernels.python_backend
    if compiled is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'kernel':<15}{'workload':<34}{'cython ms':>11}{'python ms':>11}{'speedup':>9}")
    for kernel, name, fn in workloads():
        a, b = fn(compiled), fn(python)
        if not np.array_equal(a, b):
            raise SystemExit(f"{kernel} on {name}: backends disagree")
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(python), number=1, repeat=args.repeat))
        print(f"{kernel:<15}{name:<34}{tc * 1e3:>11.3f}{tp * 1e3:>11.3f}{tp / tc:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
