"""CART induction that keeps a class distribution on every node."""
import math

import numpy as np

from .data import Dataset
from .errors import DataError
from .forest import Forest, Tree

MIN_SAMPLES_SPLIT = 2
_TIE_TOL = 1e-12


def _best_split(X, y, idx, features, n_classes):
    """Best (score, feature, threshold) over ``features`` or None.

    Score is sum(count_c^2)/n over both children, i.e. larger is lower
    weighted Gini impurity.  Features are scanned in the given order and
    thresholds ascending; only a strictly better score replaces the incumbent.
    """
    best = None
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        valid = np.nonzero(xs[:-1] < xs[1:])[0]
        if valid.size == 0:
            continue
        onehot = np.zeros((xs.size, n_classes))
        onehot[np.arange(xs.size), y[idx][order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        total = cum[-1]
        cl = cum[valid]
        cr = total - cl
        nl = valid + 1.0
        nr = xs.size - nl
        score = (cl * cl).sum(axis=1) / nl + (cr * cr).sum(axis=1) / nr
        top = score.max()
        p = valid[np.nonzero(score >= top - _TIE_TOL * max(1.0, abs(top)))[0][0]]
        s = score[np.searchsorted(valid, p)]
        if best is None or s > best[0] + _TIE_TOL * max(1.0, abs(best[0])):
            thr = 0.5 * (xs[p] + xs[p + 1])
            if thr >= xs[p + 1]:
                thr = xs[p]
            best = (s, int(f), float(thr))
    return best


def _grow_tree(X, y, idx, n_classes, max_depth, n_sub, rng):
    feature, threshold, left, right, value, count = [], [], [], [], [], []
    n_features = X.shape[1]

    def build(idx, depth):
        k = len(feature)
        counts = np.bincount(y[idx], minlength=n_classes)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        count.append(idx.size)
        if depth >= max_depth or idx.size < MIN_SAMPLES_SPLIT or np.count_nonzero(counts) <= 1:
            return k
        perm = rng.permutation(n_features)
        split = _best_split(X, y, idx, np.sort(perm[:n_sub]), n_classes)
        for f in perm[n_sub:]:
            # sampled features were all constant here; keep drawing
            if split is not None:
                break
            split = _best_split(X, y, idx, [f], n_classes)
        if split is None:
            return k
        _, f, thr = split
        go_left = X[idx, f] <= thr
        feature[k] = f
        threshold[k] = thr
        left[k] = build(idx[go_left], depth + 1)
        right[k] = build(idx[~go_left], depth + 1)
        return k

    build(idx, 0)
    return Tree(feature, threshold, left, right, np.array(value), count)


def tree_rng(seed, tree_index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tree_index)]))


def train_forest(train: Dataset, n_trees=10, max_depth=8, seed=0, bootstrap=True, feature_subsample="sqrt"):
    """Grow ``n_trees`` Gini trees of depth at most ``max_depth``.

    ``feature_subsample`` is ``"sqrt"`` (ceil of the square root of the feature
    count), ``"all"``/``None``, or an explicit count of features tried per node.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if len(train) == 0:
        raise DataError("empty training set")
    X, y = train.features, train.labels
    n, n_features = X.shape
    if feature_subsample == "sqrt":
        n_sub = math.ceil(math.sqrt(n_features))
    elif feature_subsample in (None, "all"):
        n_sub = n_features
    else:
        n_sub = int(feature_subsample)
        if not 1 <= n_sub <= n_features:
            raise ValueError(f"feature_subsample must be in [1, {n_features}]")

    trees = []
    for i in range(n_trees):
        rng = tree_rng(seed, i)
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(_grow_tree(X, y, idx, train.n_classes, max_depth, n_sub, rng))
    return Forest(trees, train.n_classes, n_features, train.label_map)
