"""Step orders and the state lattice.

A lattice state is the vector of per-tree step counters.  It is encoded as a
mixed-radix integer with tree 0 as the least significant digit, so that every
predecessor of a state has a smaller code.

The accuracy of a state depends only on its counters.  An order's quality is
the mean state accuracy over all K+1 states it visits, the all-roots start
state included.
"""
import heapq
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import kernels
from .errors import LatticeCapExceeded, StructureError

DEFAULT_LATTICE_CAP = 50_000_000
ENUMERATION_LIMIT = 1_000_000


@dataclass(frozen=True, eq=False)
class StepOrder:
    steps: np.ndarray
    budgets: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64).reshape(-1)
        budgets = np.asarray(self.budgets, dtype=np.int64).reshape(-1)
        if budgets.size == 0 or np.any(budgets < 0):
            raise StructureError("budgets must be a non-empty array of non-negative integers")
        if steps.size and (steps.min() < 0 or steps.max() >= budgets.size):
            raise StructureError("step refers to a tree that does not exist")
        if not np.array_equal(np.bincount(steps, minlength=budgets.size), budgets):
            raise StructureError("every tree must appear exactly budget(i) times")
        steps.flags.writeable = False
        budgets.flags.writeable = False
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "budgets", budgets)

    @property
    def n_steps(self):
        return int(self.steps.size)

    def __len__(self):
        return self.n_steps

    def __eq__(self, other):
        if not isinstance(other, StepOrder):
            return NotImplemented
        return np.array_equal(self.steps, other.steps) and np.array_equal(self.budgets, other.budgets)

    def __hash__(self):
        return hash((self.steps.tobytes(), self.budgets.tobytes()))

    def __repr__(self):
        return f"StepOrder(steps={self.steps.tolist()}, budgets={self.budgets.tolist()})"

    def states(self):
        """Counter vectors of all visited states, shape (K+1, t)."""
        out = np.zeros((self.n_steps + 1, self.budgets.size), dtype=np.int64)
        for k, i in enumerate(self.steps):
            out[k + 1] = out[k]
            out[k + 1, i] += 1
        return out

    def check_forest(self, forest):
        if not np.array_equal(self.budgets, forest.budgets):
            raise StructureError(
                f"order budgets {self.budgets.tolist()} do not match tree depths {forest.budgets.tolist()}")


def lattice_size(budgets):
    return math.prod(int(b) + 1 for b in budgets)


def encode_state(counters, budgets):
    code, stride = 0, 1
    for c, b in zip(counters, budgets):
        if not 0 <= c <= b:
            raise StructureError(f"counter {c} outside [0, {b}]")
        code += int(c) * stride
        stride *= int(b) + 1
    return code


def decode_state(code, budgets):
    out = []
    for b in budgets:
        code, c = divmod(code, int(b) + 1)
        out.append(c)
    if code:
        raise StructureError("state code out of range")
    return tuple(out)


@dataclass(frozen=True, eq=False)
class RoutingTable:
    """Node occupied by every sample in every tree after k steps.

    ``routes[s, i, k]`` for ``k`` in ``0..budget(i)``; past a leaf the leaf
    repeats.  ``qval`` holds the fixed-point prediction vector of each node.
    """
    routes: np.ndarray
    qval: np.ndarray
    value: np.ndarray
    budgets: np.ndarray

    @property
    def n_samples(self):
        return self.routes.shape[0]

    @property
    def n_trees(self):
        return self.routes.shape[1]

    def prediction(self, sample, tree, depth):
        return self.value[tree, self.routes[sample, tree, depth]]


def precompute_routing(forest, ordering):
    X = getattr(ordering, "features", ordering)
    X = forest.check_samples(X)
    if X.shape[0] == 0:
        raise ValueError("ordering set is empty")
    feat, thr, left, right, qval = forest.packed
    routes = np.asarray(kernels.route(feat, thr, left, right, X, forest.max_depth))
    value = np.zeros(qval.shape)
    for i, tr in enumerate(forest.trees):
        value[i, :tr.n_nodes] = tr.value
    return RoutingTable(routes, qval, value, forest.budgets.copy())


def _labels(labels, routing):
    y = np.ascontiguousarray(getattr(labels, "labels", labels), dtype=np.int64)
    if y.shape != (routing.n_samples,):
        raise ValueError("labels do not match routing table")
    return y


def state_correct(routing, labels, state):
    counters = np.asarray(getattr(state, "counters", state), dtype=np.int64)
    if counters.shape != routing.budgets.shape or np.any(counters < 0) or np.any(counters > routing.budgets):
        raise StructureError(f"state {counters.tolist()} outside budgets {routing.budgets.tolist()}")
    return int(kernels.state_correct(routing.routes, routing.qval, _labels(labels, routing), counters))


def state_accuracy(routing, labels, state):
    return state_correct(routing, labels, state) / routing.n_samples


def order_correct_counts(routing, labels, order):
    """Correct-sample counts of the K+1 states along ``order``."""
    if not np.array_equal(order.budgets, routing.budgets):
        raise StructureError("order budgets do not match routing table")
    return np.asarray(kernels.walk_correct(routing.routes, routing.qval, _labels(labels, routing),
                                           order.steps.copy()))


def mean_accuracy(routing, labels, order):
    counts = order_correct_counts(routing, labels, order)
    return int(counts.sum()) / (counts.size * routing.n_samples)


# ----------------------------------------------------------------------------
# exact search


def _check_cap(budgets, cap):
    n = lattice_size(budgets)
    if n > cap:
        raise LatticeCapExceeded(n, cap)
    return n


def _dijkstra(routing, labels, maximize):
    """Priority-queue search over lazily evaluated states.

    Edge weight into a state is its number of misclassified samples (or of
    correct samples when minimising accuracy).
    """
    budgets = routing.budgets
    t = budgets.size
    n = routing.n_samples
    strides = [1] * t
    for i in range(1, t):
        strides[i] = strides[i - 1] * (int(budgets[i - 1]) + 1)
    goal = lattice_size(budgets) - 1

    def weight(code):
        c = state_correct(routing, labels, decode_state(code, budgets))
        return n - c if maximize else c

    dist = {0: 0}
    parent = {}
    done = set()
    heap = [(0, 0)]
    while heap:
        d, code = heapq.heappop(heap)
        if code in done:
            continue
        done.add(code)
        if code == goal:
            break
        counters = decode_state(code, budgets)
        for i in range(t):
            if counters[i] == budgets[i]:
                continue
            nxt = code + strides[i]
            if nxt in done:
                continue
            nd = d + weight(nxt)
            if nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                parent[nxt] = (code, i)
                heapq.heappush(heap, (nd, nxt))
    steps = []
    code = goal
    while code:
        code, i = parent[code]
        steps.append(i)
    return StepOrder(steps[::-1], budgets)


def _extreme_order(forest, ordering, maximize, lattice_cap, method):
    if len(getattr(ordering, "labels", ordering)) == 0:
        raise ValueError("ordering set is empty")
    _check_cap(forest.budgets, lattice_cap)
    routing = precompute_routing(forest, ordering)
    labels = _labels(ordering, routing)
    if method == "dijkstra":
        return _dijkstra(routing, labels, maximize)
    if method != "dp":
        raise ValueError(f"unknown method {method!r}")
    weights = np.asarray(kernels.lattice_correct(routing.routes, routing.qval, labels, routing.budgets))
    if maximize:
        np.subtract(routing.n_samples, weights, out=weights)
    steps, _ = kernels.lattice_path(weights, routing.budgets.copy())
    return StepOrder(np.asarray(steps), routing.budgets)


def optimal_order(forest, ordering, lattice_cap=DEFAULT_LATTICE_CAP, method="dp"):
    """Order with the highest mean accuracy on ``ordering``.

    ``method="dp"`` sweeps the whole lattice in code order (every state is
    scored once, by a Gray-code walk); ``"dijkstra"`` runs a priority-queue
    search that only scores the states it reaches.  Both are exact.
    Raises LatticeCapExceeded when the lattice has more than ``lattice_cap`` states.
    """
    return _extreme_order(forest, ordering, True, lattice_cap, method)


def unoptimal_order(forest, ordering, lattice_cap=DEFAULT_LATTICE_CAP, method="dp"):
    """Order with the lowest mean accuracy on ``ordering``."""
    return _extreme_order(forest, ordering, False, lattice_cap, method)


# ----------------------------------------------------------------------------
# greedy


def _squirrel(forest, ordering, backward, return_evaluations):
    if len(getattr(ordering, "labels", ordering)) == 0:
        raise ValueError("ordering set is empty")
    routing = precompute_routing(forest, ordering)
    labels = _labels(ordering, routing)
    steps, evals = kernels.squirrel(routing.routes, routing.qval, labels, routing.budgets.copy(), backward)
    order = StepOrder(np.asarray(steps), routing.budgets)
    return (order, int(evals)) if return_evaluations else order


def forward_squirrel(forest, ordering, return_evaluations=False):
    """Greedy walk from the roots: always take the step into the best next state."""
    return _squirrel(forest, ordering, False, return_evaluations)


def backward_squirrel(forest, ordering, return_evaluations=False):
    """Greedy walk back from the leaves: always undo the step whose
    predecessor state scores best; the reversed walk is the order."""
    return _squirrel(forest, ordering, True, return_evaluations)


# ----------------------------------------------------------------------------
# enumeration / random


def count_orders(budgets):
    total = math.factorial(int(sum(budgets)))
    for b in budgets:
        total //= math.factorial(int(b))
    return total


def enumerate_all_orders(budgets, limit=ENUMERATION_LIMIT) -> Iterator[StepOrder]:
    """Every distinct order for ``budgets``, in lexicographic order."""
    budgets = np.asarray(budgets, dtype=np.int64)
    n = count_orders(budgets)
    if n > limit:
        raise ValueError(f"{n} orders exceed the enumeration limit {limit}")
    seq = np.repeat(np.arange(budgets.size), budgets).tolist()
    while True:
        yield StepOrder(seq, budgets)
        k = len(seq) - 2
        while k >= 0 and seq[k] >= seq[k + 1]:
            k -= 1
        if k < 0:
            return
        j = len(seq) - 1
        while seq[j] <= seq[k]:
            j -= 1
        seq[k], seq[j] = seq[j], seq[k]
        seq[k + 1:] = reversed(seq[k + 1:])


def random_order(budgets, seed):
    budgets = np.asarray(budgets, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return StepOrder(rng.permutation(np.repeat(np.arange(budgets.size), budgets)), budgets)
