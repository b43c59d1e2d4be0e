"""Tree sequences from ensemble-pruning and early-exit heuristics, and the
depth-first / breadth-first step orders built from them.

All sequences keep every tree; only their position changes.  Scores are
computed on the ordering set from each tree's leaf prediction.
"""
import numpy as np

from .errors import StructureError, UnsupportedForestError
from .kernels import decide_rows as _decide
from .lattice import StepOrder, precompute_routing

EA_LAMBDA = 0.5
DREP_RHO = 0.5


def _check_sequence(sequence, t):
    seq = [int(i) for i in sequence]
    if sorted(seq) != list(range(t)):
        raise StructureError(f"{seq} is not a permutation of range({t})")
    return seq


def depth_order(sequence, budgets):
    """Run each tree of ``sequence`` to its leaf before starting the next."""
    budgets = np.asarray(budgets, dtype=np.int64)
    seq = _check_sequence(sequence, budgets.size)
    return StepOrder([i for i in seq for _ in range(budgets[i])], budgets)


def breadth_order(sequence, budgets):
    """Layer by layer over ``sequence``; exhausted trees drop out."""
    budgets = np.asarray(budgets, dtype=np.int64)
    seq = _check_sequence(sequence, budgets.size)
    steps = [i for layer in range(int(budgets.max(initial=0))) for i in seq if budgets[i] > layer]
    return StepOrder(steps, budgets)


class LeafTable:
    """Leaf prediction of every tree for every ordering sample."""

    def __init__(self, forest, ordering):
        if len(ordering) == 0:
            raise ValueError("ordering set is empty")
        routing = precompute_routing(forest, ordering)
        t = forest.n_trees
        trees = np.arange(t)
        leaves = routing.routes[:, trees, routing.budgets]  # (n, t)
        self.q = routing.qval[trees[None, :], leaves]  # (n, t, c) fixed point
        self.labels = np.asarray(ordering.labels, dtype=np.int64)
        self.tree_pred = _decide(self.q, 1)  # (n, t)
        self.ensemble_pred = _decide(self.q.sum(axis=1), t)
        self.correct = (self.tree_pred == self.labels[:, None]).sum(axis=0)  # (t,)

    @property
    def n(self):
        return self.labels.size

    @property
    def t(self):
        return self.correct.size

    def correct_of(self, sums, n_summed):
        return int(np.count_nonzero(_decide(sums, n_summed) == self.labels))


def _rank(scores):
    """Indices sorted by score descending, ties by index."""
    scores = np.asarray(scores)
    return [int(i) for i in np.lexsort((np.arange(scores.size), -scores))]


def sequence_individual_error(forest, ordering):
    return _rank(LeafTable(forest, ordering).correct)


def error_ambiguity_scores(table, lam=EA_LAMBDA):
    acc = table.correct / table.n
    ambiguity = (table.tree_pred != table.ensemble_pred[:, None]).mean(axis=0)
    return acc + lam * ambiguity


def sequence_error_ambiguity(forest, ordering, lam=EA_LAMBDA):
    """Accuracy plus ``lam`` times the rate of disagreeing with the full forest."""
    return _rank(error_ambiguity_scores(LeafTable(forest, ordering), lam))


def sequence_reduced_error(forest, ordering):
    """Greedily append the tree that makes the prefix ensemble most accurate."""
    tab = LeafTable(forest, ordering)
    sums = np.zeros((tab.n, tab.q.shape[2]), dtype=np.int64)
    remaining = list(range(tab.t))
    seq = []
    while remaining:
        scores = [tab.correct_of(sums + tab.q[:, j], len(seq) + 1) for j in remaining]
        j = remaining[int(np.argmax(scores))]
        seq.append(j)
        remaining.remove(j)
        sums += tab.q[:, j]
    return seq


def sequence_drep(forest, ordering, rho=DREP_RHO):
    """Start from the most accurate tree, then repeatedly append the tree with
    the lowest ``error - rho * disagreement`` against the prefix ensemble."""
    tab = LeafTable(forest, ordering)
    err = 1.0 - tab.correct / tab.n
    first = int(np.argmin(err))
    seq = [first]
    remaining = [j for j in range(tab.t) if j != first]
    sums = tab.q[:, first].copy()
    while remaining:
        prefix_pred = _decide(sums, len(seq))
        scores = [err[j] - rho * np.mean(tab.tree_pred[:, j] != prefix_pred) for j in remaining]
        j = remaining[int(np.argmin(scores))]
        seq.append(j)
        remaining.remove(j)
        sums += tab.q[:, j]
    return seq


def decided_mask(margin, low, high, tol=0):
    """Samples whose final binary decision is fixed.

    ``margin`` is the class-0 minus class-1 fixed-point sum of the placed
    trees; ``low``/``high`` bound what the unplaced trees can still add.  The
    full forest picks class 0 when the final margin is at least ``-tol``.
    """
    return (margin + low >= -tol) | (margin + high < -tol)


def sequence_qwyc(forest, ordering):
    """Greedy "quit when you can" sequence for binary forests.

    Each round appends the tree after which the most ordering samples have a
    decision the remaining trees can no longer overturn.
    """
    if forest.n_classes != 2:
        raise UnsupportedForestError(f"QWYC needs a binary forest, this one has {forest.n_classes} classes")
    tab = LeafTable(forest, ordering)
    diff = tab.q[:, :, 0] - tab.q[:, :, 1]  # (n, t)
    lo = np.empty(tab.t, dtype=np.int64)
    hi = np.empty(tab.t, dtype=np.int64)
    for i, tree in enumerate(forest.trees):
        leaf = tree.left < 0
        d = tree.qvalue[leaf, 0] - tree.qvalue[leaf, 1]
        lo[i], hi[i] = d.min(), d.max()
    margin = np.zeros(tab.n, dtype=np.int64)
    remaining = list(range(tab.t))
    seq = []
    while remaining:
        low, high = lo[remaining].sum(), hi[remaining].sum()
        best = None
        for j in remaining:
            decided = int(np.count_nonzero(decided_mask(margin + diff[:, j], low - lo[j], high - hi[j], tab.t)))
            key = (decided, int(tab.correct[j]))
            if best is None or key > best[0]:
                best = (key, j)
        j = best[1]
        seq.append(j)
        remaining.remove(j)
        margin += diff[:, j]
    return seq
