"""Forests whose every node carries a class-probability vector.

Trees are stored as flat node arrays (index 0 is the root, child index -1
marks a leaf).  Class decisions are taken on fixed-point sums of the
prediction vectors (``QSCALE`` units per probability mass of 1), which makes
the decision independent of the order in which vectors are added or removed.
Rounding moves a sum of ``m`` vectors by at most ``m/2`` units, so scores
within ``m`` units of the top count as tied; ties go to the lowest class index.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, StructureError

QSCALE = 2**32
PROB_TOL = 1e-9
COUNT_TOL = 1e-6


def quantize(values):
    return np.rint(np.asarray(values, dtype=np.float64) * QSCALE).astype(np.int64)


@dataclass(frozen=True)
class Node:
    prediction: tuple
    count: int
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional[int] = None
    right: Optional[int] = None

    @property
    def is_leaf(self):
        return self.left is None and self.right is None


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class Tree:
    """A single tree as parallel node arrays.

    Leaves have ``left == right == -1`` and ``feature == -1``.
    """

    def __init__(self, feature, threshold, left, right, value, count):
        self.feature = _readonly(np.asarray(feature, dtype=np.int64))
        self.threshold = _readonly(np.asarray(threshold, dtype=np.float64))
        self.left = _readonly(np.asarray(left, dtype=np.int64))
        self.right = _readonly(np.asarray(right, dtype=np.int64))
        self.value = _readonly(np.atleast_2d(np.asarray(value, dtype=np.float64)))
        self.count = _readonly(np.asarray(count, dtype=np.int64))
        n = self.feature.shape[0]
        for name in ("threshold", "left", "right", "count"):
            if getattr(self, name).shape != (n,):
                raise StructureError(f"node array '{name}' has length {getattr(self, name).shape}, expected {n}")
        if n == 0:
            raise StructureError("a tree needs at least a root node")
        if self.value.shape[0] != n:
            raise StructureError("prediction array does not match node count")
        self.qvalue = _readonly(quantize(self.value))
        self.node_depth = _readonly(self._check_shape())
        self.max_depth_steps = int(self.node_depth.max())

    @classmethod
    def from_nodes(cls, nodes: Sequence[Node]):
        feature, threshold, left, right, value, count = [], [], [], [], [], []
        for node in nodes:
            leaf = node.left is None and node.right is None
            if not leaf and (node.left is None or node.right is None):
                raise StructureError("node has exactly one child")
            feature.append(-1 if leaf else (node.feature if node.feature is not None else -2))
            threshold.append(0.0 if leaf or node.threshold is None else node.threshold)
            left.append(-1 if leaf else node.left)
            right.append(-1 if leaf else node.right)
            value.append(node.prediction)
            count.append(node.count)
        return cls(feature, threshold, left, right, value, count)

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def nodes(self):
        out = []
        for k in range(self.n_nodes):
            pred = tuple(float(v) for v in self.value[k])
            if self.left[k] < 0:
                out.append(Node(pred, int(self.count[k])))
            else:
                out.append(Node(pred, int(self.count[k]), int(self.feature[k]), float(self.threshold[k]),
                                int(self.left[k]), int(self.right[k])))
        return out

    def is_leaf(self, k):
        return self.left[k] < 0

    def _check_shape(self):
        n = self.n_nodes
        inner = (self.left >= 0) | (self.right >= 0)
        if np.any(inner & ((self.left < 0) | (self.right < 0))):
            raise StructureError("node has exactly one child")
        children = np.concatenate([self.left[inner], self.right[inner]])
        if np.any(children >= n) or np.any(children < 0):
            raise StructureError("child index out of range")
        if np.any(children == 0):
            raise StructureError("root cannot be a child")
        if np.unique(children).size != children.size:
            raise StructureError("node has more than one parent")
        # every non-root node has one parent; now check reachability (rules out cycles)
        depth = np.full(n, -1, dtype=np.int64)
        depth[0] = 0
        stack = [0]
        while stack:
            k = stack.pop()
            if inner[k]:
                for ch in (self.left[k], self.right[k]):
                    if depth[ch] >= 0:
                        raise StructureError("cycle in child graph")
                    depth[ch] = depth[k] + 1
                    stack.append(ch)
        if np.any(depth < 0):
            raise StructureError("node unreachable from root")
        return depth

    def validate(self, n_classes, n_features):
        if self.value.shape[1] != n_classes:
            raise StructureError(f"prediction vectors have {self.value.shape[1]} entries, expected {n_classes}")
        if np.any(self.value < 0) or not np.all(np.isfinite(self.value)):
            raise StructureError("prediction vector with negative or non-finite entry")
        if np.any(np.abs(self.value.sum(axis=1) - 1.0) > PROB_TOL):
            raise StructureError("prediction vector does not sum to 1")
        if np.any(self.count < 0):
            raise StructureError("negative sample count")
        inner = self.left >= 0
        f = self.feature[inner]
        if np.any(f < 0) or np.any(f >= n_features):
            raise StructureError("feature index out of range")
        if np.any(self.count[inner] != self.count[self.left[inner]] + self.count[self.right[inner]]):
            raise StructureError("sample counts of children do not add up to parent")

    def step(self, node_id, sample):
        return tree_step(self, node_id, sample)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(np.array_equal(getattr(self, a), getattr(other, a))
                   for a in ("feature", "threshold", "left", "right", "value", "count"))

    def __repr__(self):
        return f"Tree(n_nodes={self.n_nodes}, max_depth_steps={self.max_depth_steps})"


class Forest:
    def __init__(self, trees, n_classes, n_features, class_labels=None):
        self.trees = tuple(trees)
        self.n_classes = int(n_classes)
        self.n_features = int(n_features)
        if class_labels is None:
            class_labels = list(range(self.n_classes))
        self.class_labels = tuple(class_labels)
        if len(self.trees) < 1:
            raise StructureError("a forest needs at least one tree")
        if self.n_classes < 1 or len(self.class_labels) != self.n_classes:
            raise StructureError("class_labels must have n_classes entries")
        for tree in self.trees:
            tree.validate(self.n_classes, self.n_features)

    @property
    def n_trees(self):
        return len(self.trees)

    @cached_property
    def budgets(self):
        return _readonly(np.array([tr.max_depth_steps for tr in self.trees], dtype=np.int64))

    @property
    def max_depth(self):
        return int(self.budgets.max())

    @property
    def total_steps(self):
        return int(self.budgets.sum())

    @cached_property
    def step_tables(self):
        """Per-tree ``(feature, threshold, left, right, qvalue)`` as Python lists
        (qvalue stays an array) for the step-by-step executor."""
        return tuple((tr.feature.tolist(), tr.threshold.tolist(), tr.left.tolist(), tr.right.tolist(), tr.qvalue)
                     for tr in self.trees)

    @cached_property
    def root_qsum(self):
        q = np.sum([tr.qvalue[0] for tr in self.trees], axis=0)
        q.flags.writeable = False
        return q

    @cached_property
    def packed(self):
        """Padded ``(feat, thr, left, right, qval)`` arrays for the kernels."""
        t = self.n_trees
        M = max(tr.n_nodes for tr in self.trees)
        feat = np.full((t, M), -1, dtype=np.int64)
        thr = np.zeros((t, M), dtype=np.float64)
        left = np.full((t, M), -1, dtype=np.int64)
        right = np.full((t, M), -1, dtype=np.int64)
        qval = np.zeros((t, M, self.n_classes), dtype=np.int64)
        for i, tr in enumerate(self.trees):
            m = tr.n_nodes
            feat[i, :m] = tr.feature
            thr[i, :m] = tr.threshold
            left[i, :m] = tr.left
            right[i, :m] = tr.right
            qval[i, :m] = tr.qvalue
        return tuple(_readonly(a) for a in (feat, thr, left, right, qval))

    def check_sample(self, sample):
        x = np.asarray(sample, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.n_features:
            raise DataError(f"sample has shape {x.shape}, expected ({self.n_features},)")
        return x

    def check_samples(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"samples have shape {X.shape}, expected (n, {self.n_features})")
        return np.ascontiguousarray(X)

    def __eq__(self, other):
        if not isinstance(other, Forest):
            return NotImplemented
        return (self.n_classes == other.n_classes and self.n_features == other.n_features
                and self.class_labels == other.class_labels and self.trees == other.trees)

    def __repr__(self):
        return (f"Forest(n_trees={self.n_trees}, n_classes={self.n_classes}, "
                f"n_features={self.n_features}, budgets={list(self.budgets)})")


@dataclass
class AnytimeState:
    node_index: np.ndarray
    steps_taken: np.ndarray = field(default=None)

    def __post_init__(self):
        self.node_index = np.asarray(self.node_index, dtype=np.int64)
        if self.steps_taken is None:
            self.steps_taken = np.zeros_like(self.node_index)
        self.steps_taken = np.asarray(self.steps_taken, dtype=np.int64)

    @classmethod
    def initial(cls, forest):
        t = forest.n_trees
        return cls(np.zeros(t, dtype=np.int64), np.zeros(t, dtype=np.int64))

    def copy(self):
        return AnytimeState(self.node_index.copy(), self.steps_taken.copy())


def tree_step(tree, node_id, sample):
    """Advance one edge from ``node_id``; a leaf stays where it is."""
    if not 0 <= node_id < tree.n_nodes:
        raise StructureError(f"node index {node_id} out of range for tree with {tree.n_nodes} nodes")
    left = tree.left[node_id]
    if left < 0:
        return int(node_id)
    if sample[tree.feature[node_id]] <= tree.threshold[node_id]:
        return int(left)
    return int(tree.right[node_id])


def decide(q, n_summed):
    """Lowest class index whose fixed-point score is within ``n_summed`` of the top."""
    q = np.asarray(q)
    return int(np.argmax(q >= q.max() - n_summed))


def combined_prediction(forest, state):
    """Return ``(class index, summed prediction vector)`` at ``state``.

    Ties go to the lowest class index.
    """
    idx = np.asarray(state.node_index)
    if idx.shape != (forest.n_trees,):
        raise StructureError("state does not match forest")
    summed = np.zeros(forest.n_classes)
    q = np.zeros(forest.n_classes, dtype=np.int64)
    for tree, k in zip(forest.trees, idx):
        if not 0 <= k < tree.n_nodes:
            raise StructureError(f"node index {k} out of range")
        summed += tree.value[k]
        q += tree.qvalue[k]
    return decide(q, forest.n_trees), summed


def walk_to_leaf(tree, sample):
    k = 0
    while tree.left[k] >= 0:
        k = tree_step(tree, k, sample)
    return k


def full_inference(forest, sample):
    x = forest.check_sample(sample)
    q = np.zeros(forest.n_classes, dtype=np.int64)
    for tree in forest.trees:
        q += tree.qvalue[walk_to_leaf(tree, x)]
    return decide(q, forest.n_trees)


def predict(forest, X):
    """Full-forest class indices for a batch of samples."""
    from . import kernels

    X = forest.check_samples(X)
    feat, thr, left, right, qval = forest.packed
    return np.asarray(kernels.predict_at(feat, thr, left, right, qval, X, forest.budgets.copy()))
