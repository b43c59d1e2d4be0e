"""A hand-built 3-tree, depth-2 binary forest with 8 ordering samples.

Each tree is laid out as ``[root, L, R, LL, LR, RL, RR]``.  ``MEMBERS`` lists,
per tree and node, which of the samples 1..8 reach it; samples 1-4 are class
0 and 5-8 class 1.  Every node's prediction vector is the class distribution
of its members, so the forest is its own training set.

Inner node ``j`` of tree ``i`` tests feature ``3 * i + j`` against 0.5; a
sample's value there is 0.0 if it goes left and 1.0 otherwise.
"""
import numpy as np

from .data import Dataset
from .forest import Forest, Tree

MEMBERS = (
    ({1, 2, 3, 4, 5, 6, 7, 8}, {5, 6}, {1, 2, 3, 4, 7, 8}, {5}, {6}, {7}, {1, 2, 3, 4, 8}),
    ({1, 2, 3, 4, 5, 6, 7, 8}, {1, 5, 6, 7, 8}, {2, 3, 4}, {5}, {1, 6, 7, 8}, {2}, {3, 4}),
    ({1, 2, 3, 4, 5, 6, 7, 8}, {1, 2, 5, 6}, {3, 4, 7, 8}, {1, 5}, {2, 6}, {7, 8}, {3, 4}),
)
LABELS = (0, 0, 0, 0, 1, 1, 1, 1)
_LEFT = (1, 3, 5, -1, -1, -1, -1)
_RIGHT = (2, 4, 6, -1, -1, -1, -1)


def example_samples():
    X = np.ones((8, 9))
    for i, members in enumerate(MEMBERS):
        for j, left_child in enumerate(_LEFT[:3]):
            for s in members[left_child]:
                X[s - 1, 3 * i + j] = 0.0
    return Dataset(X, np.array(LABELS), (0, 1), "three-tree-example")


def example_forest():
    trees = []
    for i, members in enumerate(MEMBERS):
        value = [[sum(LABELS[s - 1] == c for s in m) / len(m) for c in (0, 1)] for m in members]
        feature = [3 * i, 3 * i + 1, 3 * i + 2, -1, -1, -1, -1]
        threshold = [0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]
        trees.append(Tree(feature, threshold, _LEFT, _RIGHT, value, [len(m) for m in members]))
    return Forest(trees, 2, 9, (0, 1))
