from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedgame.baselines import (
    CoalitionValueTable,
    ShapleyVector,
    coalition_table,
    compute_shapley,
    greedy_policy,
    greedy_recipients,
    local_only_policy,
    shapley_from_table,
    shapley_policy,
    uniform_policy,
)
from fedgame.core import CoalitionTooLarge
from fedgame.estimation import RegressionModel
from fedgame.game import RewardParams, reward
from fedgame.oracle import SyntheticOracle, SyntheticSpec
from fedgame.pipeline import evaluate_policy

from scenarios import synthetic


def models_from(weights, b=0.5):
    return [RegressionModel(i, b, np.array(w, float)) for i, w in enumerate(weights)]


def brute_force_shapley(values, target, n):
    """Average marginal contribution over every arrival order."""
    partners = [j for j in range(n) if j != target]
    phi = np.zeros(n)
    orders = list(permutations(partners))
    for order in orders:
        seen = frozenset()
        for j in order:
            phi[j] += values[seen | {j}] - values[seen]
            seen = seen | {j}
    return phi / len(orders)


WORKED = {frozenset(): 0.5, frozenset({1}): 0.6, frozenset({2}): 0.7, frozenset({1, 2}): 0.75}


def test_local_only():
    s = synthetic()
    m = local_only_policy(s)
    assert not m.any()
    oracle = SyntheticOracle(s.oracle)
    ev = evaluate_policy(s, oracle, m, 0, models=models_from(np.ones((3, 3))))
    assert ev.per_platform_metric == [oracle.evaluate(i, np.zeros(3), 0) for i in range(3)]
    assert ev.per_platform_reward == [0.5, 0.5, 0.5]


def test_uniform():
    s = synthetic()
    m = uniform_policy(s)
    assert np.allclose(m[~np.eye(3, dtype=bool)], 0.45)
    assert np.allclose(m.sum(axis=1), 0.9, rtol=0, atol=1e-15)


def test_uniform_two_platforms():
    s = synthetic(weights=((0, 1), (1, 0)))
    m = uniform_policy(s)
    assert m[0, 1] == s.effective_budgets[0] and m[1, 0] == s.effective_budgets[1]


def test_greedy_excludes_outsider():
    # 1 and 2 value each other most; 0 values 1 but 1 never offers back.
    s = synthetic(weights=((0, 0.5, 0.4), (0.3, 0, 2.0), (0.2, 1.8, 0)))
    m = greedy_policy(s, models_from(s.oracle.weights))
    assert m[1, 2] == m[2, 1] == s.effective_budgets[1]
    assert not m[0].any() and not m[:, 0].any()


def test_greedy_zero_weights():
    s = synthetic()
    assert not greedy_policy(s, models_from(np.zeros((3, 3)))).any()


def test_greedy_two_platforms():
    s = synthetic(weights=((0, 0.4), (0.7, 0)))
    m = greedy_policy(s, models_from(s.oracle.weights))
    assert m[0, 1] == s.effective_budgets[0] and m[1, 0] == s.effective_budgets[1]


def test_greedy_switches_to_reciprocating_partner():
    # 0 wants 1, 1 wants 2, 2 wants 0: a cycle with no mutual pair.
    w = ((0, 1.0, 0.5), (0.5, 0, 1.0), (1.0, 0.5, 0))
    r = greedy_recipients(models_from(w))
    for i, j in enumerate(r):
        assert j is None or r[j] == i


@settings(max_examples=100)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_greedy_final_offers_are_reciprocated(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-0.5, 2, (n, n))
    np.fill_diagonal(w, 0)
    r = greedy_recipients(models_from(w))
    for i, j in enumerate(r):
        assert j is None or r[j] == i


def test_shapley_worked_table():
    phi = shapley_from_table(CoalitionValueTable(0, WORKED), 3).phi
    assert phi == pytest.approx([0, 0.075, 0.175], abs=1e-12)
    assert phi.sum() == pytest.approx(WORKED[frozenset({1, 2})] - WORKED[frozenset()], abs=1e-12)
    assert np.allclose(phi, brute_force_shapley(WORKED, 0, 3), atol=1e-12)


def test_shapley_symmetric_table():
    v = {frozenset(): 0.5, frozenset({1}): 0.6, frozenset({2}): 0.6, frozenset({1, 2}): 0.7}
    phi = shapley_from_table(CoalitionValueTable(0, v), 3).phi
    assert phi[1] == phi[2]


def random_table(rng, n, target):
    partners = [j for j in range(n) if j != target]
    values = {}
    for mask in range(2 ** len(partners)):
        s = frozenset(p for k, p in enumerate(partners) if mask >> k & 1)
        values[s] = float(rng.uniform(0, 1))
    return values


@settings(max_examples=60)
@given(st.integers(0, 10_000), st.integers(3, 6))
def test_shapley_matches_permutation_average(seed, n):
    rng = np.random.default_rng(seed)
    values = random_table(rng, n, 0)
    phi = shapley_from_table(CoalitionValueTable(0, values), n).phi
    assert np.allclose(phi, brute_force_shapley(values, 0, n), atol=1e-12)
    full = frozenset(range(1, n))
    assert phi.sum() == pytest.approx(values[full] - values[frozenset()], abs=1e-9)


def test_coalition_table_from_oracle():
    spec = SyntheticSpec((0.5, 0.5, 0.5), ((0, 1.0, 3.0), (1, 0, 1), (1, 1, 0)))
    table = coalition_table(0, SyntheticOracle(spec), 0.05, 0)
    assert table.values[frozenset({1, 2})] == pytest.approx(0.5 + 0.05 + 0.15)
    phi = compute_shapley(0, SyntheticOracle(spec), 0.05, 0).phi
    # additive oracle: each partner's value is exactly its own contribution
    assert phi == pytest.approx([0, 0.05, 0.15], abs=1e-12)


def test_coalition_table_too_large():
    n = 13
    spec = SyntheticSpec((0.5,) * n, np.ones((n, n)).tolist())
    with pytest.raises(CoalitionTooLarge):
        coalition_table(0, SyntheticOracle(spec), 0.05, 0)


def test_shapley_policy_proportional():
    s = synthetic()
    vectors = [ShapleyVector(0, np.array([0, 0.075, 0.175])), ShapleyVector(1, np.array([-0.1, 0, -0.2])),
               ShapleyVector(2, np.array([0.3, 0.0, 0]))]
    m = shapley_policy(s, vectors)
    assert m[0] == pytest.approx([0, 0.27, 0.63], abs=1e-12)
    assert not m[1].any()
    assert m[2] == pytest.approx([0.9, 0, 0])
