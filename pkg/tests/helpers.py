"""Independent oracles and generators shared by the tests.

The oracles here route samples with ``tree_step`` one edge at a time and
score states with ``combined_prediction``; they share no code with the
kernels they check.
"""
import itertools
from functools import lru_cache

import numpy as np

from anyforest.cart import train_forest
from anyforest.data import Dataset, split, synthetic_dataset
from anyforest.forest import AnytimeState, Forest, Tree, combined_prediction, tree_step

# correct-of-8 counts for every lattice state of the three-tree example
EXAMPLE_STATE_CORRECT = {
    (0, 0, 0): 4, (0, 0, 1): 4, (0, 1, 0): 7, (1, 0, 0): 6,
    (0, 0, 2): 6, (0, 1, 1): 7, (0, 2, 0): 7, (1, 0, 1): 6, (1, 1, 0): 7, (2, 0, 0): 7,
    (0, 1, 2): 7, (0, 2, 1): 7, (1, 0, 2): 8, (1, 1, 1): 7, (1, 2, 0): 7, (2, 0, 1): 7, (2, 1, 0): 7,
    (0, 2, 2): 7, (1, 1, 2): 7, (1, 2, 1): 7, (2, 0, 2): 8, (2, 1, 1): 7, (2, 2, 0): 7,
    (1, 2, 2): 7, (2, 1, 2): 8, (2, 2, 1): 7,
    (2, 2, 2): 8,
}
# the highlighted optimal path 000 -> 010 -> 110 -> 210 -> 211 -> 212 -> 222
EXAMPLE_OPTIMAL_STEPS = [1, 0, 0, 2, 2, 1]


def node_after(tree, sample, k):
    node = 0
    for _ in range(k):
        node = tree_step(tree, node, sample)
    return node


class BruteScorer:
    """State accuracy by walking every sample from the roots."""

    def __init__(self, forest, X, y):
        self.forest = forest
        self.X = np.asarray(X)
        self.y = np.asarray(y)
        self.correct = lru_cache(maxsize=None)(self._correct)

    def _correct(self, counters):
        hits = 0
        for x, label in zip(self.X, self.y):
            idx = [node_after(tr, x, c) for tr, c in zip(self.forest.trees, counters)]
            cls, _ = combined_prediction(self.forest, AnytimeState(idx))
            hits += cls == label
        return hits

    def order_correct(self, steps):
        counters = [0] * self.forest.n_trees
        out = [self.correct(tuple(counters))]
        for i in steps:
            counters[i] += 1
            out.append(self.correct(tuple(counters)))
        return out

    def greedy(self, backward=False):
        budgets = [int(b) for b in self.forest.budgets]
        counters = list(budgets) if backward else [0] * len(budgets)
        steps = []
        for _ in range(sum(budgets)):
            best = None
            for i in range(len(budgets)):
                cand = list(counters)
                cand[i] += -1 if backward else 1
                if not 0 <= cand[i] <= budgets[i]:
                    continue
                score = self.correct(tuple(cand))
                if best is None or score > best[0]:
                    best = (score, i, cand)
            steps.append(best[1])
            counters = best[2]
        return steps[::-1] if backward else steps


def multiset_orders(budgets):
    """All distinct orders via itertools (independent of the lattice enumerator)."""
    base = [i for i, b in enumerate(budgets) for _ in range(b)]
    return sorted(set(itertools.permutations(base)))


def trained_case(seed, n_trees=3, depth=2, n_ordering=32, n_classes=2, n_features=3, spread=2.0):
    """A trained forest plus its ordering split, from synthetic data."""
    data = synthetic_dataset(4 * n_ordering, n_features, n_classes, seed=seed, spread=spread)
    parts = split(data, seed)
    forest = train_forest(parts.train, n_trees, depth, seed)
    return forest, parts


def random_tree(rng, max_depth, n_features, n_classes, stop_prob=0.25):
    feature, threshold, left, right, counts = [], [], [], [], []

    def build(depth):
        k = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(None)
        if depth < max_depth and (depth == 0 or rng.random() > stop_prob):
            feature[k] = int(rng.integers(n_features))
            threshold[k] = float(rng.integers(-2, 3))
            left[k] = build(depth + 1)
            right[k] = build(depth + 1)
            counts[k] = counts[left[k]] + counts[right[k]]
        else:
            c = rng.integers(0, 3, size=n_classes)
            if c.sum() == 0:
                c[rng.integers(n_classes)] = 1
            counts[k] = c
        return k

    build(0)
    counts = np.array(counts)
    totals = counts.sum(axis=1)
    return Tree(feature, threshold, left, right, counts / totals[:, None], totals)


def random_forest(seed, n_trees, max_depth, n_features=3, n_classes=2):
    """Random structure, small-integer class counts (plenty of exact ties)."""
    rng = np.random.default_rng(seed)
    trees = [random_tree(rng, max_depth, n_features, n_classes) for _ in range(n_trees)]
    return Forest(trees, n_classes, n_features)


def random_samples(seed, n, forest):
    rng = np.random.default_rng(seed)
    X = rng.integers(-3, 4, size=(n, forest.n_features)).astype(float)
    y = rng.integers(0, forest.n_classes, size=n)
    return Dataset(X, y, tuple(range(forest.n_classes)))
