import math
from collections import Counter

import numpy as np
import pytest

from anyforest.errors import LatticeCapExceeded, StructureError
from anyforest.forest import Forest
from anyforest.lattice import (StepOrder, backward_squirrel, count_orders, decode_state, encode_state,
                               enumerate_all_orders, forward_squirrel, lattice_size, mean_accuracy,
                               optimal_order, order_correct_counts, precompute_routing, random_order,
                               state_accuracy, state_correct, unoptimal_order)

from .helpers import (EXAMPLE_OPTIMAL_STEPS, EXAMPLE_STATE_CORRECT, BruteScorer, multiset_orders,
                      random_forest, random_samples, trained_case)


# -- StepOrder / encoding ------------------------------------------------------


def test_step_order_validates_multiset():
    StepOrder([0, 1, 0], [2, 1])
    with pytest.raises(StructureError):
        StepOrder([0, 1, 1], [2, 1])
    with pytest.raises(StructureError):
        StepOrder([0, 2], [1, 1])


def test_step_order_states():
    states = StepOrder([1, 0, 1], [1, 2]).states()
    assert states.tolist() == [[0, 0], [0, 1], [1, 1], [1, 2]]


def test_encode_decode():
    budgets = [2, 0, 3, 1]
    seen = set()
    for code in range(lattice_size(budgets)):
        counters = decode_state(code, budgets)
        assert encode_state(counters, budgets) == code
        seen.add(counters)
    assert len(seen) == 3 * 1 * 4 * 2


# -- routing / state accuracy --------------------------------------------------


def test_routing_roots_and_leaf_repeat():
    forest = random_forest(4, 5, 4)
    data = random_samples(1, 30, forest)
    routing = precompute_routing(forest, data)
    assert np.all(routing.routes[:, :, 0] == 0)
    for s in range(30):
        for i, tree in enumerate(forest.trees):
            for k in range(forest.max_depth):
                a, b = routing.routes[s, i, k], routing.routes[s, i, k + 1]
                if tree.is_leaf(a):
                    assert a == b
                else:
                    assert b in (tree.left[a], tree.right[a])


def test_routing_example_memberships(example):
    from anyforest.fixtures import MEMBERS

    forest, data = example
    routing = precompute_routing(forest, data)
    for i, members in enumerate(MEMBERS):
        for node, expected in enumerate(members):
            depth = 0 if node == 0 else (1 if node < 3 else 2)
            got = {s + 1 for s in range(8) if routing.routes[s, i, depth] == node}
            assert got == expected


def test_example_state_counts(example):
    forest, data = example
    routing = precompute_routing(forest, data)
    for state, correct in EXAMPLE_STATE_CORRECT.items():
        assert state_correct(routing, data.labels, state) == correct
    assert state_accuracy(routing, data.labels, (0, 0, 0)) == 0.5


def test_state_out_of_budget(example):
    forest, data = example
    routing = precompute_routing(forest, data)
    with pytest.raises(StructureError):
        state_correct(routing, data.labels, (3, 0, 0))


@pytest.mark.parametrize("seed", range(8))
def test_state_accuracy_matches_brute(seed):
    forest = random_forest(seed, 3, 3, n_classes=3)
    data = random_samples(seed + 100, 25, forest)
    routing = precompute_routing(forest, data)
    brute = BruteScorer(forest, data.features, data.labels)
    for code in range(lattice_size(forest.budgets)):
        counters = decode_state(code, forest.budgets)
        assert state_correct(routing, data.labels, counters) == brute.correct(counters)


# -- mean accuracy -------------------------------------------------------------


def test_mean_accuracy_example_path(example):
    forest, data = example
    routing = precompute_routing(forest, data)
    order = StepOrder(EXAMPLE_OPTIMAL_STEPS, forest.budgets)
    assert order_correct_counts(routing, data.labels, order).tolist() == [4, 7, 7, 7, 7, 8, 8]
    assert mean_accuracy(routing, data.labels, order) == 6 / 7


def test_mean_accuracy_constant_forest():
    forest = random_forest(0, 3, 3)
    const = Forest([t for t in forest.trees], 2, 3)
    data = random_samples(3, 20, const)
    # every node of a single-class forest predicts class 0
    from anyforest.forest import Tree

    trees = [Tree(t.feature, t.threshold, t.left, t.right, np.tile([1.0, 0.0], (t.n_nodes, 1)),
                  np.zeros(t.n_nodes, dtype=int)) for t in forest.trees]
    const = Forest(trees, 2, 3)
    routing = precompute_routing(const, data)
    rate = np.mean(data.labels == 0)
    order = random_order(const.budgets, 0)
    assert mean_accuracy(routing, data.labels, order) == pytest.approx(rate, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_mean_accuracy_matches_brute(seed):
    forest = random_forest(seed, 4, 3)
    data = random_samples(seed, 20, forest)
    routing = precompute_routing(forest, data)
    brute = BruteScorer(forest, data.features, data.labels)
    for k in range(5):
        order = random_order(forest.budgets, k)
        assert order_correct_counts(routing, data.labels, order).tolist() == brute.order_correct(order.steps)


# -- optimal / unoptimal -------------------------------------------------------


def test_optimal_example(example):
    forest, data = example
    routing = precompute_routing(forest, data)
    for method in ("dp", "dijkstra"):
        order = optimal_order(forest, data, method=method)
        assert mean_accuracy(routing, data.labels, order) == 6 / 7
    assert optimal_order(forest, data, method="dijkstra").steps.tolist() == EXAMPLE_OPTIMAL_STEPS


def test_unoptimal_example_bounded(example):
    forest, data = example
    routing = precompute_routing(forest, data)
    assert mean_accuracy(routing, data.labels, unoptimal_order(forest, data)) <= 6 / 7


def test_single_tree_unique_order():
    forest = random_forest(2, 1, 4)
    data = random_samples(0, 10, forest)
    expected = [0] * forest.total_steps
    for fn in (optimal_order, unoptimal_order, forward_squirrel, backward_squirrel):
        assert fn(forest, data).steps.tolist() == expected


@pytest.mark.parametrize("seed", range(12))
def test_optimal_unoptimal_match_enumeration(seed):
    forest = random_forest(seed, 3, 2, n_classes=2 + seed % 2)
    data = random_samples(seed, 24, forest)
    brute = BruteScorer(forest, data.features, data.labels)
    totals = [sum(brute.order_correct(o)) for o in multiset_orders(list(forest.budgets))]
    routing = precompute_routing(forest, data)
    for method in ("dp", "dijkstra"):
        best = order_correct_counts(routing, data.labels, optimal_order(forest, data, method=method)).sum()
        worst = order_correct_counts(routing, data.labels, unoptimal_order(forest, data, method=method)).sum()
        assert best == max(totals)
        assert worst == min(totals)


def test_lattice_cap_refusal():
    forest, parts = trained_case(0, n_trees=6, depth=4)
    with pytest.raises(LatticeCapExceeded) as err:
        optimal_order(forest, parts.ordering, lattice_cap=100)
    assert "squirrel" in str(err.value)
    with pytest.raises(LatticeCapExceeded):
        unoptimal_order(forest, parts.ordering, lattice_cap=100)


def test_empty_ordering_set():
    forest = random_forest(0, 2, 2)
    empty = random_samples(0, 0, forest)
    for fn in (optimal_order, forward_squirrel, backward_squirrel):
        with pytest.raises(ValueError):
            fn(forest, empty)


# -- squirrels -----------------------------------------------------------------


def test_forward_squirrel_example_first_step(example):
    forest, data = example
    order = forward_squirrel(forest, data)
    assert order.steps[0] == 1
    routing = precompute_routing(forest, data)
    assert state_correct(routing, data.labels, (0, 1, 0)) == 7


def test_backward_squirrel_example_last_step(example):
    forest, data = example
    order = backward_squirrel(forest, data)
    assert order.steps[-1] == 1
    assert order.states()[-2].tolist() == [2, 1, 2]
    routing = precompute_routing(forest, data)
    assert state_correct(routing, data.labels, (2, 1, 2)) == 8


@pytest.mark.parametrize("seed", range(15))
@pytest.mark.parametrize("backward", [False, True])
def test_squirrels_match_brute_greedy(seed, backward):
    t, d = (2, 1) if seed < 5 else (3, 3)
    forest = random_forest(seed, t, d, n_classes=2 + seed % 3)
    data = random_samples(seed, 20, forest)
    brute = BruteScorer(forest, data.features, data.labels)
    fn = backward_squirrel if backward else forward_squirrel
    assert fn(forest, data).steps.tolist() == brute.greedy(backward)


@pytest.mark.parametrize("seed", range(5))
def test_squirrel_evaluation_count(seed):
    forest, parts = trained_case(seed, n_trees=5, depth=4)
    order, evals = forward_squirrel(forest, parts.ordering, return_evaluations=True)
    states = order.states()
    assert evals == sum(int(np.sum(s < forest.budgets)) for s in states[:-1])
    order, evals = backward_squirrel(forest, parts.ordering, return_evaluations=True)
    states = order.states()
    assert evals == sum(int(np.sum(s > 0)) for s in states[1:])
    assert evals <= forest.max_depth * forest.n_trees ** 2


# -- enumeration / random ------------------------------------------------------


@pytest.mark.parametrize("budgets, count", [([2, 2, 2], 90), ([3], 1), ([1, 1, 1], 6), ([2, 0, 1], 3)])
def test_enumeration_counts(budgets, count):
    orders = list(enumerate_all_orders(budgets))
    assert len(orders) == count == count_orders(budgets)
    assert len({tuple(o.steps) for o in orders}) == count


def test_enumeration_matches_itertools():
    budgets = [2, 1, 2]
    ours = [tuple(o.steps) for o in enumerate_all_orders(budgets)]
    assert ours == multiset_orders(budgets)


def test_enumeration_formula():
    d, t = 2, 3
    assert count_orders([d] * t) == math.factorial(d * t) // math.factorial(d) ** t


def test_enumeration_guard():
    with pytest.raises(ValueError):
        next(enumerate_all_orders([5] * 5))


def test_random_order_deterministic():
    assert random_order([3, 1, 2], 7) == random_order([3, 1, 2], 7)
    assert random_order([3, 1, 2], 7).budgets.tolist() == [3, 1, 2]


def test_random_order_uniform():
    from scipy.stats import chisquare

    draws = 100_000
    rng = np.random.default_rng(0)
    seeds = rng.integers(0, 2**63, size=draws)
    counts = Counter(tuple(random_order([2, 2, 2], int(s)).steps) for s in seeds)
    assert len(counts) == 90
    observed = np.array([counts[o] for o in multiset_orders([2, 2, 2])])
    assert chisquare(observed).pvalue > 1e-3
