"""Command line entry point.

Exit codes: 0 success, 1 config/usage error, 2 data or model error,
3 lattice-cap refusal when the optimal order was explicitly requested,
4 oracle mismatch.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from . import kernels
from .cart import train_forest
from .data import load_csv, split, synthetic_dataset
from .errors import DataError, LatticeCapExceeded, SchemaError, StructureError, UnsupportedForestError
from .evaluation import (ALL_ORDER_NAMES, ConfigError, generate_order, load_config, nma,
                         correct_curve, run_experiment)
from .lattice import (DEFAULT_LATTICE_CAP, enumerate_all_orders, mean_accuracy, optimal_order,
                      precompute_routing, unoptimal_order)
from .serialization import load_forest, load_order, save_forest, save_order

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CAP, EXIT_ORACLE = 0, 1, 2, 3, 4


def _label_column(text):
    try:
        return int(text)
    except ValueError:
        return text


def _load_splits(args):
    return split(load_csv(args.data, args.label_column), args.seed)


def cmd_train(args):
    parts = _load_splits(args)
    sub = args.feature_subsample
    if sub not in ("sqrt", "all"):
        sub = int(sub)
    forest = train_forest(parts.train, args.trees, args.depth, args.seed, not args.no_bootstrap, sub)
    save_forest(forest, args.out)
    print(f"wrote {args.out}: {forest.n_trees} trees, budgets {forest.budgets.tolist()}")
    return EXIT_OK


def cmd_order(args):
    forest = load_forest(args.forest)
    parts = _load_splits(args)
    order = generate_order(args.order, forest, parts.ordering, args.seed, args.lattice_cap)
    save_order(order, args.out)
    routing = precompute_routing(forest, parts.ordering)
    print(f"wrote {args.out}: {args.order}, {order.n_steps} steps, "
          f"ordering-set mean accuracy {mean_accuracy(routing, parts.ordering.labels, order):.4f}")
    return EXIT_OK


def cmd_run(args):
    forest = load_forest(args.forest)
    order = load_order(args.order_file)
    order.check_forest(forest)
    parts = _load_splits(args)
    curve = correct_curve(forest, order, parts.test) / len(parts.test)
    result = {
        "curve": curve.tolist(),
        "mean_accuracy": float(curve.mean()),
        "final_accuracy": float(curve[-1]),
        "nma": nma(curve) if curve[-1] > 0 else None,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=1))
    print(f"final accuracy {result['final_accuracy']:.4f}  mean accuracy {result['mean_accuracy']:.4f}  "
          f"NMA {result['nma'] if result['nma'] is None else round(result['nma'], 4)}")
    return EXIT_OK


def cmd_experiment(args):
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.jobs:
        cfg.jobs = args.jobs
    reports = run_experiment(cfg)
    ok = [r for r in reports if r.status == "ok"]
    print(f"{len(reports)} reports ({len(ok)} ok) -> {cfg.out_dir or '(not written)'}")
    return EXIT_OK


def cmd_oracle(args):
    if args.forest:
        forest = load_forest(args.forest)
        ordering = _load_splits(args).ordering
    else:
        data = synthetic_dataset(4 * args.samples, n_features=3, seed=args.seed)
        parts = split(data, args.seed)
        forest = train_forest(parts.train, args.trees, args.depth, args.seed)
        ordering = parts.ordering
    routing = precompute_routing(forest, ordering)
    accs = [mean_accuracy(routing, ordering.labels, o) for o in enumerate_all_orders(forest.budgets)]
    best = mean_accuracy(routing, ordering.labels, optimal_order(forest, ordering, args.lattice_cap))
    worst = mean_accuracy(routing, ordering.labels, unoptimal_order(forest, ordering, args.lattice_cap))
    ok = best == max(accs) and worst == min(accs)
    print(f"budgets {forest.budgets.tolist()}: {len(accs)} orders enumerated")
    print(f"  enumerated max {max(accs):.6f}  optimal {best:.6f}")
    print(f"  enumerated min {min(accs):.6f}  unoptimal {worst:.6f}")
    print("  PASS" if ok else "  FAIL")
    return EXIT_OK if ok else EXIT_ORACLE


def build_parser():
    p = argparse.ArgumentParser(prog="anyforest", description="Anytime random forest step orders.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, required=True):
        sp.add_argument("--data", required=required, help="CSV dataset")
        sp.add_argument("--label-column", type=_label_column, default=-1,
                        help="label column name or index (default: last)")
        sp.add_argument("--seed", type=int, default=0, help="split / training seed")

    sp = sub.add_parser("train", help="train a forest on the train split")
    data_args(sp)
    sp.add_argument("--trees", type=int, default=10)
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--no-bootstrap", action="store_true")
    sp.add_argument("--feature-subsample", default="sqrt", help="'sqrt', 'all' or a count")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("order", help="generate a step order on the ordering split")
    data_args(sp)
    sp.add_argument("--forest", required=True)
    sp.add_argument("--order", choices=ALL_ORDER_NAMES, default="bsquirrel")
    sp.add_argument("--lattice-cap", type=int, default=DEFAULT_LATTICE_CAP)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_order)

    sp = sub.add_parser("run", help="accuracy curve and NMA of an order on the test split")
    data_args(sp)
    sp.add_argument("--forest", required=True)
    sp.add_argument("--order-file", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("experiment", help="run a config grid, write reports.jsonl")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", help="override the config's out_dir")
    sp.add_argument("--jobs", type=int)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("oracle", help="check optimal/unoptimal against exhaustive enumeration")
    data_args(sp, required=False)
    sp.add_argument("--forest")
    sp.add_argument("--trees", type=int, default=3)
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--samples", type=int, default=32, help="ordering-set size for synthetic data")
    sp.add_argument("--lattice-cap", type=int, default=DEFAULT_LATTICE_CAP)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).info("kernel backend: %s", kernels.BACKEND)
    if getattr(args, "command", None) == "oracle" and args.forest and not args.data:
        print("error: --forest needs --data", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LatticeCapExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CAP
    except UnsupportedForestError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, SchemaError, StructureError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
