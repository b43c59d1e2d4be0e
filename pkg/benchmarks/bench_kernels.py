"""Time every kernel under the numpy fallback and the numba backend.

    python3 benchmarks/bench_kernels.py [--trees 6] [--depth 6] [--samples 300]

Both backends run in this process (``kernels.NUMPY`` and ``kernels.ACTIVE``);
results are checked for equality before timing.  Without numba only the numpy
column is printed.
"""
import argparse
import time

import numpy as np

from anyforest import kernels
from anyforest.cart import train_forest
from anyforest.data import Dataset, split
from anyforest.lattice import precompute_routing, random_order


def best_of(fn, args, repeat):
    runs = []
    for _ in range(repeat):
        copies = [a.copy() if isinstance(a, np.ndarray) else a for a in args]
        t0 = time.perf_counter()
        out = fn(*copies)
        runs.append(time.perf_counter() - t0)
    return min(runs), out


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--trees", type=int, default=6)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--samples", type=int, default=300, help="ordering-set size")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    n = 4 * args.samples
    data = Dataset(rng.normal(size=(n, 8)), rng.integers(0, 3, n), (0, 1, 2))
    parts = split(data, 0)
    forest = train_forest(parts.train, args.trees, args.depth, seed=0)
    routing = precompute_routing(forest, parts.ordering)
    labels = parts.ordering.labels
    feat, thr, left, right, qval = forest.packed
    order = random_order(forest.budgets, 0)
    weights = np.asarray(kernels.NUMPY["lattice_correct"](routing.routes, qval, labels, routing.budgets))
    cases = {
        "route": (feat, thr, left, right, parts.ordering.features, forest.max_depth),
        "state_correct": (routing.routes, qval, labels, forest.budgets.copy()),
        "lattice_correct": (routing.routes, qval, labels, routing.budgets),
        "lattice_path": (weights, routing.budgets),
        "squirrel": (routing.routes, qval, labels, routing.budgets, True),
        "walk_correct": (routing.routes, qval, labels, order.steps.copy()),
        "predict_at": (feat, thr, left, right, qval, parts.ordering.features, forest.budgets.copy()),
    }
    print(f"budgets {forest.budgets.tolist()}, lattice {weights.size} states, {len(labels)} samples")
    fast = kernels.HAS_NUMBA
    print(f"{'kernel':<16}{'numpy s':>12}" + (f"{'numba s':>12}{'speedup':>10}" if fast else ""))
    for name, case in cases.items():
        t_np, out_np = best_of(kernels.NUMPY[name], case, args.repeat)
        line = f"{name:<16}{t_np:>12.5f}"
        if fast:
            kernels.ACTIVE[name](*[a.copy() if isinstance(a, np.ndarray) else a for a in case])  # compile
            t_nb, out_nb = best_of(kernels.ACTIVE[name], case, args.repeat)
            if not same(out_np, out_nb):
                raise SystemExit(f"{name}: backends disagree")
            line += f"{t_nb:>12.5f}{t_np / t_nb:>10.1f}"
        print(line)


if __name__ == "__main__":
    main()
