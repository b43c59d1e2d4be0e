"""Accuracy-vs-steps curves, normalised mean accuracy and the experiment grid."""
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import kernels
from .cart import train_forest
from .data import load_csv, split
from .errors import AnyforestError, LatticeCapExceeded, UnsupportedForestError
from .lattice import (DEFAULT_LATTICE_CAP, backward_squirrel, forward_squirrel, optimal_order,
                      order_correct_counts, precompute_routing, random_order, unoptimal_order)
from .sequences import (breadth_order, depth_order, sequence_drep, sequence_error_ambiguity,
                        sequence_individual_error, sequence_qwyc, sequence_reduced_error)

log = logging.getLogger(__name__)

REPORT_VERSION = "anyforest-report-1"
NMA_FORMULA = "nma-v1"

SEQUENCERS = {
    "ie": sequence_individual_error,
    "ea": sequence_error_ambiguity,
    "re": sequence_reduced_error,
    "drep": sequence_drep,
    "qwyc": sequence_qwyc,
    "identity": lambda forest, ordering: list(range(forest.n_trees)),
}
ORDER_NAMES = (
    ["optimal", "unoptimal", "fsquirrel", "bsquirrel"]
    + [f"{kind}-{seq}" for seq in ("ie", "ea", "re", "drep", "qwyc") for kind in ("depth", "breadth")]
    + ["random"]
)
ALL_ORDER_NAMES = ORDER_NAMES + ["depth-identity", "breadth-identity"]


class ConfigError(AnyforestError, ValueError):
    pass


def generate_order(name, forest, ordering, seed=0, lattice_cap=DEFAULT_LATTICE_CAP):
    """Build the step order called ``name`` from the ordering split only."""
    if name == "optimal":
        return optimal_order(forest, ordering, lattice_cap)
    if name == "unoptimal":
        return unoptimal_order(forest, ordering, lattice_cap)
    if name == "fsquirrel":
        return forward_squirrel(forest, ordering)
    if name == "bsquirrel":
        return backward_squirrel(forest, ordering)
    if name == "random":
        return random_order(forest.budgets, seed)
    kind, _, seq = name.partition("-")
    if kind in ("depth", "breadth") and seq in SEQUENCERS:
        sequence = SEQUENCERS[seq](forest, ordering)
        return (depth_order if kind == "depth" else breadth_order)(sequence, forest.budgets)
    raise ValueError(f"unknown order {name!r}")


def correct_curve(forest, order, dataset):
    routing = precompute_routing(forest, dataset)
    return order_correct_counts(routing, dataset.labels, order)


def accuracy_curve(forest, order, test):
    """Accuracy on ``test`` when aborting after k steps, for k = 0..K."""
    order.check_forest(forest)
    return correct_curve(forest, order, test) / len(test)


def nma(curve):
    """Mean of the curve divided by its final value."""
    curve = np.asarray(curve, dtype=np.float64)
    if curve.size == 0 or curve[-1] <= 0:
        raise ValueError("normalised mean accuracy needs a positive final accuracy")
    return float(curve.mean() / curve[-1])


@dataclass
class EvalReport:
    dataset: str
    seed: int
    n_trees: int
    max_depth: int
    order: str
    status: str = "ok"  # ok | refused | unsupported
    message: str = ""
    budgets: List[int] = field(default_factory=list)
    steps: List[int] = field(default_factory=list)
    curve: List[float] = field(default_factory=list)
    mean_accuracy: Optional[float] = None
    final_accuracy: Optional[float] = None
    nma: Optional[float] = None
    ordering_mean_accuracy: Optional[float] = None
    ordering_nma: Optional[float] = None
    generation_seconds: Optional[float] = None
    format_version: str = REPORT_VERSION
    nma_formula: str = NMA_FORMULA

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown report fields {sorted(unknown)}")
        if d.get("format_version", REPORT_VERSION) != REPORT_VERSION:
            raise ValueError(f"unsupported report version {d['format_version']!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, line):
        return cls.from_dict(json.loads(line))


def evaluate_order(forest, step_order, ordering, test, **meta):
    """Score ``step_order`` on both splits; ``meta`` fills the report's id fields."""
    test_counts = correct_curve(forest, step_order, test)
    ord_counts = correct_curve(forest, step_order, ordering)
    curve = test_counts / len(test)
    ord_curve = ord_counts / len(ordering)
    return EvalReport(
        budgets=step_order.budgets.tolist(),
        steps=step_order.steps.tolist(),
        curve=curve.tolist(),
        mean_accuracy=float(curve.mean()),
        final_accuracy=float(curve[-1]),
        nma=nma(curve) if curve[-1] > 0 else None,
        ordering_mean_accuracy=float(ord_curve.mean()),
        ordering_nma=nma(ord_curve) if ord_curve[-1] > 0 else None,
        **meta,
    )


@dataclass
class ExperimentConfig:
    dataset: str
    label_column: object = -1
    seeds: List[int] = field(default_factory=lambda: [0])
    trees: List[int] = field(default_factory=lambda: [4])
    depths: List[int] = field(default_factory=lambda: [4])
    orders: List[str] = field(default_factory=lambda: list(ORDER_NAMES))
    lattice_cap: int = DEFAULT_LATTICE_CAP
    out_dir: Optional[str] = None
    jobs: int = 1
    bootstrap: bool = True
    feature_subsample: object = "sqrt"
    require_optimal: bool = False
    name: Optional[str] = None

    def __post_init__(self):
        for key in ("seeds", "trees", "depths", "orders"):
            v = getattr(self, key)
            if not isinstance(v, list) or not v:
                raise ConfigError(f"'{key}' must be a non-empty list")
        if any(not isinstance(v, int) or v < 1 for v in self.trees + self.depths):
            raise ConfigError("'trees' and 'depths' must be positive integers")
        bad = [o for o in self.orders if o not in ALL_ORDER_NAMES]
        if bad:
            raise ConfigError(f"unknown orders {bad}")
        if not isinstance(self.lattice_cap, int) or self.lattice_cap < 1:
            raise ConfigError("'lattice_cap' must be a positive integer")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("'jobs' must be a positive integer")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be an object")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "dataset" not in d:
            raise ConfigError("config needs 'dataset'")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = ExperimentConfig.from_dict(doc)
    if not Path(cfg.dataset).is_absolute():
        cfg.dataset = str((path.parent / cfg.dataset).resolve())
    return cfg


def run_cell(dataset, seed, n_trees, max_depth, orders, lattice_cap=DEFAULT_LATTICE_CAP,
             bootstrap=True, feature_subsample="sqrt", require_optimal=False):
    """Split, train, generate every order on the ordering split, score on test."""
    parts = split(dataset, seed)
    forest = train_forest(parts.train, n_trees, max_depth, seed, bootstrap, feature_subsample)
    meta = dict(dataset=dataset.name, seed=seed, n_trees=n_trees, max_depth=max_depth)
    reports = []
    for name in orders:
        t0 = time.perf_counter()
        try:
            order = generate_order(name, forest, parts.ordering, seed, lattice_cap)
        except LatticeCapExceeded as exc:
            if require_optimal and name == "optimal":
                raise
            reports.append(EvalReport(order=name, status="refused", message=str(exc),
                                      budgets=forest.budgets.tolist(), **meta))
            continue
        except UnsupportedForestError as exc:
            reports.append(EvalReport(order=name, status="unsupported", message=str(exc),
                                      budgets=forest.budgets.tolist(), **meta))
            continue
        elapsed = time.perf_counter() - t0
        rep = evaluate_order(forest, order, parts.ordering, parts.test, order=name, **meta)
        rep.generation_seconds = elapsed
        reports.append(rep)
    return reports


def _cell_job(args):
    return run_cell(*args)


def run_experiment(config, dataset=None):
    """Run the full {seed} x {trees} x {depth} x {order} grid.

    Returns the reports in grid order; when ``config.out_dir`` is set they are
    also written to ``<out_dir>/reports.jsonl``.
    """
    if dataset is None:
        dataset = load_csv(config.dataset, config.label_column, name=config.name)
    jobs = [(dataset, seed, t, d, config.orders, config.lattice_cap, config.bootstrap,
             config.feature_subsample, config.require_optimal)
            for seed in config.seeds for t in config.trees for d in config.depths]
    log.info("running %d grid cells on %s (%s kernels)", len(jobs), dataset.name, kernels.BACKEND)
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]
    reports = [r for cell in results for r in cell]
    if config.out_dir:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_reports(reports, out / "reports.jsonl")
    return reports


def write_reports(reports, path):
    with open(path, "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def read_reports(path):
    with open(path) as fh:
        return [EvalReport.from_json(line) for line in fh if line.strip()]
