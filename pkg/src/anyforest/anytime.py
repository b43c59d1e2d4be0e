"""Step-wise forest execution that can be stopped after any step."""
import time

import numpy as np

from . import kernels
from .errors import StructureError
from .forest import AnytimeState, decide


class AnytimeExecutor:
    """Walks one sample through a forest along a fixed step order.

    Holds the per-tree node index and a running fixed-point sum of the current
    nodes' prediction vectors, so a prediction is available after every step
    in O(n_classes).  One executor per in-flight sample.
    """

    def __init__(self, forest, order, sample=None):
        order.check_forest(forest)
        self.forest = forest
        self.order = order
        self._steps = order.steps.tolist()
        self._trees = forest.step_tables
        if sample is not None:
            self.reset(sample)

    def reset(self, sample):
        x = self.forest.check_sample(sample)
        self._x = x.tolist()
        t = self.forest.n_trees
        self.node_index = [0] * t
        self.steps_taken = [0] * t
        self.position = 0
        self._q = self.forest.root_qsum.copy()
        return self

    @property
    def done(self):
        return self.position >= len(self._steps)

    def step(self):
        """Take the next step of the order; returns the tree it advanced."""
        i = self._steps[self.position]
        feat, thr, left, right, qv = self._trees[i]
        k = self.node_index[i]
        if left[k] >= 0:
            nxt = left[k] if self._x[feat[k]] <= thr[k] else right[k]
            self._q += qv[nxt] - qv[k]
            self.node_index[i] = nxt
        self.steps_taken[i] += 1
        self.position += 1
        return i

    def prediction(self):
        return decide(self._q, self.forest.n_trees)

    @property
    def state(self):
        return AnytimeState(np.array(self.node_index), np.array(self.steps_taken))


def execute(forest, order, sample, abort_after=None):
    """Run the first ``abort_after`` steps (default: all) and predict.

    Returns ``(class index, AnytimeState)``.
    """
    ex = AnytimeExecutor(forest, order, sample)
    K = order.n_steps
    if abort_after is None:
        abort_after = K
    if not 0 <= abort_after <= K:
        raise StructureError(f"abort_after={abort_after} outside [0, {K}]")
    for _ in range(abort_after):
        ex.step()
    return ex.prediction(), ex.state


def execute_with_budget(forest, order, sample, budget, clock=time.perf_counter):
    """Execute until ``budget`` seconds have elapsed, checked before each step.

    Returns ``(class index, steps executed)``.  A step that has started is
    always completed.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    ex = AnytimeExecutor(forest, order, sample)
    deadline = clock() + budget
    K = order.n_steps
    step = ex.step
    while ex.position < K and clock() < deadline:
        step()
    return ex.prediction(), ex.position


def prefix_counters(order, abort_after):
    return np.bincount(order.steps[:abort_after], minlength=order.budgets.size).astype(np.int64)


def execute_batch(forest, order, samples, abort_after=None):
    """``execute`` for every row of ``samples``; returns the class indices."""
    order.check_forest(forest)
    K = order.n_steps
    if abort_after is None:
        abort_after = K
    if not 0 <= abort_after <= K:
        raise StructureError(f"abort_after={abort_after} outside [0, {K}]")
    X = np.asarray(samples, dtype=np.float64)
    if X.size == 0:
        return np.zeros(0, dtype=np.int64)
    X = forest.check_samples(X)
    feat, thr, left, right, qval = forest.packed
    return np.asarray(kernels.predict_at(feat, thr, left, right, qval, X, prefix_counters(order, abort_after)))
