"""Hot loops.

Every kernel exists twice: a plain-loop version that numba compiles, and a
vectorised numpy version used when numba is disabled or missing.  Both return
identical results; class decisions are taken on int64 fixed-point prediction
sums, so summation order never changes a decision.

A sum of ``t`` rounded vectors is off by at most ``t/2`` units per class, so
classes within ``t`` units of the top score are treated as tied and the lowest
index among them wins.  Exact ties in the unrounded vectors thus resolve the
same way however the rounding fell.

Array conventions
-----------------
feat, thr, left, right : (t, M)     padded per-tree node arrays, child -1 = leaf
qval                   : (t, M, c)  fixed-point prediction vectors
routes                 : (n, t, D+1) node occupied by sample s in tree i after k steps
budgets                : (t,)       per-tree step budget
"""
import numpy as np

from ._accel import HAS_NUMBA, njit


def decide_rows(sums, tol):
    """Lowest class index within ``tol`` of the top score, along the last axis."""
    return (sums >= sums.max(axis=-1, keepdims=True) - tol).argmax(axis=-1)


# ----------------------------------------------------------------------------
# routing


def _route_loops(feat, thr, left, right, X, depth):
    n = X.shape[0]
    t = feat.shape[0]
    out = np.zeros((n, t, depth + 1), dtype=np.int64)
    for s in range(n):
        for i in range(t):
            cur = 0
            for k in range(depth):
                l = left[i, cur]
                if l >= 0:
                    if X[s, feat[i, cur]] <= thr[i, cur]:
                        cur = l
                    else:
                        cur = right[i, cur]
                out[s, i, k + 1] = cur
    return out


def _route_np(feat, thr, left, right, X, depth):
    n = X.shape[0]
    t = feat.shape[0]
    out = np.zeros((n, t, depth + 1), dtype=np.int64)
    rows = np.arange(n)
    for i in range(t):
        cur = np.zeros(n, dtype=np.int64)
        for k in range(depth):
            inner = left[i, cur] >= 0
            f = np.where(inner, feat[i, cur], 0)
            go_left = X[rows, f] <= thr[i, cur]
            nxt = np.where(go_left, left[i, cur], right[i, cur])
            cur = np.where(inner, nxt, cur)
            out[:, i, k + 1] = cur
    return out


# ----------------------------------------------------------------------------
# single-state scoring


def _state_correct_loops(routes, qval, labels, counters):
    n = routes.shape[0]
    t = routes.shape[1]
    c = qval.shape[2]
    acc = np.zeros(c, dtype=np.int64)
    correct = 0
    for s in range(n):
        acc[:] = 0
        for i in range(t):
            node = routes[s, i, counters[i]]
            for j in range(c):
                acc[j] += qval[i, node, j]
        top = acc[0]
        for j in range(1, c):
            if acc[j] > top:
                top = acc[j]
        best = 0
        while acc[best] < top - t:
            best += 1
        if best == labels[s]:
            correct += 1
    return correct


def _state_correct_np(routes, qval, labels, counters):
    t = routes.shape[1]
    trees = np.arange(t)
    nodes = routes[:, trees, counters]  # (n, t)
    sums = qval[trees[None, :], nodes].sum(axis=1)
    return int(np.count_nonzero(decide_rows(sums, t) == labels))


# ----------------------------------------------------------------------------
# whole-lattice scoring


def _lattice_correct_loops(routes, qval, labels, budgets):
    n = routes.shape[0]
    t = routes.shape[1]
    c = qval.shape[2]
    stride = np.ones(t, dtype=np.int64)
    for i in range(1, t):
        stride[i] = stride[i - 1] * (budgets[i - 1] + 1)
    total = stride[t - 1] * (budgets[t - 1] + 1)
    out = np.zeros(total, dtype=np.int32)

    sums = np.zeros((n, c), dtype=np.int64)
    for s in range(n):
        for i in range(t):
            node = routes[s, i, 0]
            for j in range(c):
                sums[s, j] += qval[i, node, j]

    counters = np.zeros(t, dtype=np.int64)
    dirs = np.ones(t, dtype=np.int64)
    code = 0
    # reflected mixed-radix Gray code: one counter moves by one per state
    for step in range(total):
        correct = 0
        for s in range(n):
            top = sums[s, 0]
            for j in range(1, c):
                if sums[s, j] > top:
                    top = sums[s, j]
            best = 0
            while sums[s, best] < top - t:
                best += 1
            if best == labels[s]:
                correct += 1
        out[code] = correct
        if step == total - 1:
            break
        i = 0
        while True:
            nc = counters[i] + dirs[i]
            if nc >= 0 and nc <= budgets[i]:
                break
            dirs[i] = -dirs[i]
            i += 1
        old = counters[i]
        for s in range(n):
            a = routes[s, i, old]
            b = routes[s, i, nc]
            if a != b:
                for j in range(c):
                    sums[s, j] += qval[i, b, j] - qval[i, a, j]
        counters[i] = nc
        code += dirs[i] * stride[i]
    return out


def _lattice_correct_np(routes, qval, labels, budgets):
    n, t, _ = routes.shape
    c = qval.shape[2]
    radix = np.asarray(budgets, dtype=np.int64) + 1
    stride = np.concatenate(([1], np.cumprod(radix)[:-1])).astype(np.int64)
    total = int(np.prod(radix))
    out = np.zeros(total, dtype=np.int32)
    chunk = max(1, 2_000_000 // max(1, n * c))
    trees = np.arange(t)
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        counters = (codes[:, None] // stride[None, :]) % radix[None, :]  # (m, t)
        sums = np.zeros((codes.size, n, c), dtype=np.int64)
        for i in trees:
            nodes = routes[:, i, :][:, counters[:, i]].T  # (m, n)
            sums += qval[i][nodes]
        out[lo:lo + codes.size] = np.count_nonzero(decide_rows(sums, t) == labels[None, :], axis=1)
    return out


# ----------------------------------------------------------------------------
# shortest path over the lattice


def _lattice_path_loops(weights, budgets):
    t = budgets.shape[0]
    stride = np.ones(t, dtype=np.int64)
    for i in range(1, t):
        stride[i] = stride[i - 1] * (budgets[i - 1] + 1)
    total = weights.shape[0]
    cost = np.zeros(total, dtype=np.int64)
    choice = np.zeros(total, dtype=np.int16)
    counters = np.zeros(t, dtype=np.int64)
    cost[0] = weights[0]
    for code in range(1, total):
        # odometer increment, tree 0 least significant
        i = 0
        while counters[i] == budgets[i]:
            counters[i] = 0
            i += 1
        counters[i] += 1
        best = np.iinfo(np.int64).max
        arg = -1
        for i in range(t):
            if counters[i] > 0:
                v = cost[code - stride[i]]
                if v < best:
                    best = v
                    arg = i
        cost[code] = weights[code] + best
        choice[code] = arg
    K = 0
    for i in range(t):
        K += budgets[i]
    steps = np.zeros(K, dtype=np.int64)
    code = total - 1
    for k in range(K - 1, -1, -1):
        i = choice[code]
        steps[k] = i
        code -= stride[i]
    return steps, cost[total - 1]


def _lattice_path_np(weights, budgets):
    t = budgets.shape[0]
    radix = np.asarray(budgets, dtype=np.int64) + 1
    stride = np.concatenate(([1], np.cumprod(radix)[:-1])).astype(np.int64)
    total = weights.shape[0]
    codes = np.arange(total, dtype=np.int64)
    counters = (codes[:, None] // stride[None, :]) % radix[None, :]
    layer = counters.sum(axis=1)
    by_layer = np.argsort(layer, kind="stable")
    bounds = np.searchsorted(layer[by_layer], np.arange(int(radix.sum() - t) + 2))
    big = np.iinfo(np.int64).max
    cost = np.zeros(total, dtype=np.int64)
    choice = np.zeros(total, dtype=np.int16)
    cost[0] = weights[0]
    for L in range(1, bounds.size - 1):
        idx = by_layer[bounds[L]:bounds[L + 1]]
        best = np.full(idx.size, big, dtype=np.int64)
        arg = np.full(idx.size, -1, dtype=np.int16)
        for i in range(t):
            ok = counters[idx, i] > 0
            v = np.where(ok, cost[np.where(ok, idx - stride[i], 0)], big)
            better = v < best
            best = np.where(better, v, best)
            arg = np.where(better, i, arg)
        cost[idx] = weights[idx] + best
        choice[idx] = arg
    K = int(np.sum(budgets))
    steps = np.zeros(K, dtype=np.int64)
    code = total - 1
    for k in range(K - 1, -1, -1):
        i = int(choice[code])
        steps[k] = i
        code -= stride[i]
    return steps, cost[total - 1]


# ----------------------------------------------------------------------------
# greedy one-step lookahead


def _squirrel_loops(routes, qval, labels, budgets, backward):
    n = routes.shape[0]
    t = routes.shape[1]
    c = qval.shape[2]
    K = 0
    for i in range(t):
        K += budgets[i]
    counters = np.zeros(t, dtype=np.int64)
    if backward:
        for i in range(t):
            counters[i] = budgets[i]
    sums = np.zeros((n, c), dtype=np.int64)
    for s in range(n):
        for i in range(t):
            node = routes[s, i, counters[i]]
            for j in range(c):
                sums[s, j] += qval[i, node, j]
    tmp = np.zeros(c, dtype=np.int64)
    steps = np.zeros(K, dtype=np.int64)
    evals = 0
    for k in range(K):
        best_score = -1
        best_tree = -1
        for i in range(t):
            if backward:
                if counters[i] == 0:
                    continue
                nc = counters[i] - 1
            else:
                if counters[i] == budgets[i]:
                    continue
                nc = counters[i] + 1
            evals += 1
            correct = 0
            for s in range(n):
                a = routes[s, i, counters[i]]
                b = routes[s, i, nc]
                for j in range(c):
                    tmp[j] = sums[s, j] + qval[i, b, j] - qval[i, a, j]
                top = tmp[0]
                for j in range(1, c):
                    if tmp[j] > top:
                        top = tmp[j]
                best = 0
                while tmp[best] < top - t:
                    best += 1
                if best == labels[s]:
                    correct += 1
            if correct > best_score:
                best_score = correct
                best_tree = i
        i = best_tree
        nc = counters[i] - 1 if backward else counters[i] + 1
        for s in range(n):
            a = routes[s, i, counters[i]]
            b = routes[s, i, nc]
            for j in range(c):
                sums[s, j] += qval[i, b, j] - qval[i, a, j]
        counters[i] = nc
        if backward:
            steps[K - 1 - k] = i
        else:
            steps[k] = i
    return steps, evals


def _squirrel_np(routes, qval, labels, budgets, backward):
    n, t, _ = routes.shape
    K = int(np.sum(budgets))
    counters = np.array(budgets, dtype=np.int64) if backward else np.zeros(t, dtype=np.int64)
    trees = np.arange(t)
    sums = qval[trees[None, :], routes[:, trees, counters]].sum(axis=1)
    steps = np.zeros(K, dtype=np.int64)
    evals = 0
    for k in range(K):
        best_score, best_tree, best_sums = -1, -1, None
        for i in range(t):
            nc = counters[i] - 1 if backward else counters[i] + 1
            if nc < 0 or nc > budgets[i]:
                continue
            evals += 1
            cand = sums - qval[i][routes[:, i, counters[i]]] + qval[i][routes[:, i, nc]]
            correct = int(np.count_nonzero(decide_rows(cand, t) == labels))
            if correct > best_score:
                best_score, best_tree, best_sums = correct, i, cand
        sums = best_sums
        counters[best_tree] += -1 if backward else 1
        steps[K - 1 - k if backward else k] = best_tree
    return steps, evals


# ----------------------------------------------------------------------------
# walking a fixed order


def _walk_correct_loops(routes, qval, labels, steps):
    n = routes.shape[0]
    t = routes.shape[1]
    c = qval.shape[2]
    K = steps.shape[0]
    out = np.zeros(K + 1, dtype=np.int64)
    counters = np.zeros(t, dtype=np.int64)
    sums = np.zeros((n, c), dtype=np.int64)
    for s in range(n):
        for i in range(t):
            node = routes[s, i, 0]
            for j in range(c):
                sums[s, j] += qval[i, node, j]
    for k in range(K + 1):
        if k > 0:
            i = steps[k - 1]
            old = counters[i]
            for s in range(n):
                a = routes[s, i, old]
                b = routes[s, i, old + 1]
                if a != b:
                    for j in range(c):
                        sums[s, j] += qval[i, b, j] - qval[i, a, j]
            counters[i] = old + 1
        correct = 0
        for s in range(n):
            top = sums[s, 0]
            for j in range(1, c):
                if sums[s, j] > top:
                    top = sums[s, j]
            best = 0
            while sums[s, best] < top - t:
                best += 1
            if best == labels[s]:
                correct += 1
        out[k] = correct
    return out


def _walk_correct_np(routes, qval, labels, steps):
    n, t, _ = routes.shape
    K = steps.shape[0]
    out = np.zeros(K + 1, dtype=np.int64)
    counters = np.zeros(t, dtype=np.int64)
    trees = np.arange(t)
    sums = qval[trees[None, :], routes[:, trees, 0]].sum(axis=1)
    out[0] = np.count_nonzero(decide_rows(sums, t) == labels)
    for k in range(K):
        i = steps[k]
        old = counters[i]
        sums = sums + qval[i][routes[:, i, old + 1]] - qval[i][routes[:, i, old]]
        counters[i] = old + 1
        out[k + 1] = np.count_nonzero(decide_rows(sums, t) == labels)
    return out


# ----------------------------------------------------------------------------
# batch prediction at fixed per-tree depths


def _predict_at_loops(feat, thr, left, right, qval, X, counters):
    n = X.shape[0]
    t = feat.shape[0]
    c = qval.shape[2]
    out = np.zeros(n, dtype=np.int64)
    acc = np.zeros(c, dtype=np.int64)
    for s in range(n):
        acc[:] = 0
        for i in range(t):
            cur = 0
            for k in range(counters[i]):
                l = left[i, cur]
                if l < 0:
                    break
                if X[s, feat[i, cur]] <= thr[i, cur]:
                    cur = l
                else:
                    cur = right[i, cur]
            for j in range(c):
                acc[j] += qval[i, cur, j]
        top = acc[0]
        for j in range(1, c):
            if acc[j] > top:
                top = acc[j]
        best = 0
        while acc[best] < top - t:
            best += 1
        out[s] = best
    return out


def _predict_at_np(feat, thr, left, right, qval, X, counters):
    n = X.shape[0]
    rows = np.arange(n)
    acc = np.zeros((n, qval.shape[2]), dtype=np.int64)
    for i in range(feat.shape[0]):
        cur = np.zeros(n, dtype=np.int64)
        for _ in range(int(counters[i])):
            inner = left[i, cur] >= 0
            f = np.where(inner, feat[i, cur], 0)
            nxt = np.where(X[rows, f] <= thr[i, cur], left[i, cur], right[i, cur])
            cur = np.where(inner, nxt, cur)
        acc += qval[i][cur]
    return decide_rows(acc, feat.shape[0])


# ----------------------------------------------------------------------------

_NAMES = ("route", "state_correct", "lattice_correct", "lattice_path", "squirrel", "walk_correct", "predict_at")

NUMPY = {name: globals()[f"_{name}_np"] for name in _NAMES}
LOOPS = {name: globals()[f"_{name}_loops"] for name in _NAMES}

if HAS_NUMBA:
    ACTIVE = {name: njit(fn) for name, fn in LOOPS.items()}
    BACKEND = "numba"
else:
    ACTIVE = dict(NUMPY)
    BACKEND = "numpy"

route = ACTIVE["route"]
state_correct = ACTIVE["state_correct"]
lattice_correct = ACTIVE["lattice_correct"]
lattice_path = ACTIVE["lattice_path"]
squirrel = ACTIVE["squirrel"]
walk_correct = ACTIVE["walk_correct"]
predict_at = ACTIVE["predict_at"]
