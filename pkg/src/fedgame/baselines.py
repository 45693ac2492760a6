"""Comparison allocation strategies: local-only, uniform, greedy and Shapley-based."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial

import numpy as np

from .core import CoalitionTooLarge, derive_seed

MAX_SHAPLEY_PLATFORMS = 12


@dataclass(frozen=True)
class CoalitionValueTable:
    target: int
    values: dict  # frozenset of partner ids -> metric


@dataclass(frozen=True)
class ShapleyVector:
    target: int
    phi: np.ndarray


def local_only_policy(scenario) -> np.ndarray:
    n = scenario.n_platforms
    return np.zeros((n, n))


def uniform_policy(scenario) -> np.ndarray:
    n = scenario.n_platforms
    matrix = np.zeros((n, n))
    for i, b in enumerate(scenario.effective_budgets):
        matrix[i] = b / (n - 1)
        matrix[i, i] = 0.0
    return matrix


def _value_to(models, i: int) -> np.ndarray:
    w = np.maximum(np.asarray(models[i].weights, dtype=float), 0.0)
    w[i] = 0.0
    return w


def greedy_first_choices(models) -> list:
    """Each platform's most valuable partner (lowest index on ties), or None."""
    choices = []
    for i in range(len(models)):
        w = _value_to(models, i)
        choices.append(int(np.argmax(w)) if w.max() > 0 else None)
    return choices


def greedy_withdrawal_pass(recipients: list, models) -> list:
    """One sequential pass of reciprocity enforcement.

    A platform whose recipient does not offer back withdraws and switches
    to its most valuable partner among those currently offering to it, or
    stops offering. Updates take effect immediately within the pass.
    """
    recipients = list(recipients)
    n = len(recipients)
    for i in range(n):
        r = recipients[i]
        if r is None or recipients[r] == i:
            continue
        w = _value_to(models, i)
        offering = [j for j in range(n) if recipients[j] == i and w[j] > 0]
        recipients[i] = max(offering, key=lambda j: (w[j], -j)) if offering else None
    return recipients


def greedy_recipients(models) -> list:
    recipients = greedy_first_choices(models)
    # A platform switches only to a partner already offering to it, which
    # forms a mutual pair that never breaks again; everyone else can only
    # drop out. Every platform changes at most twice.
    for _ in range(2 * len(models) + 1):
        updated = greedy_withdrawal_pass(recipients, models)
        if updated == recipients:
            return recipients
        recipients = updated
    raise RuntimeError("greedy withdrawal did not reach a fixed point")


def greedy_policy(scenario, models) -> np.ndarray:
    n = scenario.n_platforms
    matrix = np.zeros((n, n))
    for i, r in enumerate(greedy_recipients(models)):
        if r is not None:
            matrix[i, r] = scenario.effective_budgets[i]
    return matrix


def shapley_from_table(table: CoalitionValueTable, n: int) -> ShapleyVector:
    """Exact Shapley values of each partner by enumerating coalitions."""
    partners = [j for j in range(n) if j != table.target]
    m = len(partners)
    phi = np.zeros(n)
    weights = [factorial(s) * factorial(m - s - 1) / factorial(m) for s in range(m)]
    for j in partners:
        others = [p for p in partners if p != j]
        total = 0.0
        for size in range(m):
            for subset in combinations(others, size):
                s = frozenset(subset)
                total += weights[size] * (table.values[s | {j}] - table.values[s])
        phi[j] = total
    return ShapleyVector(table.target, phi)


def coalition_table(target: int, oracle, deposit_fraction: float, seed: int) -> CoalitionValueTable:
    n = oracle.n
    if n > MAX_SHAPLEY_PLATFORMS:
        raise CoalitionTooLarge(f"{n} platforms; brute-force Shapley supports at most {MAX_SHAPLEY_PLATFORMS}")
    partners = [j for j in range(n) if j != target]
    values = {}
    for size in range(len(partners) + 1):
        for subset in combinations(partners, size):
            amounts = np.zeros(n)
            amounts[list(subset)] = deposit_fraction
            key = frozenset(subset)
            values[key] = float(oracle.evaluate(target, amounts, derive_seed(seed, "coalition", target, *sorted(key))))
    return CoalitionValueTable(target, values)


def compute_shapley(target: int, oracle, deposit_fraction: float, seed: int) -> ShapleyVector:
    table = coalition_table(target, oracle, deposit_fraction, seed)
    return shapley_from_table(table, oracle.n)


def shapley_policy(scenario, shapley) -> np.ndarray:
    """Split each budget in proportion to the positive Shapley values of partners' data to this platform."""
    n = scenario.n_platforms
    matrix = np.zeros((n, n))
    for sv in shapley:
        i = sv.target
        pos = np.maximum(np.asarray(sv.phi, dtype=float), 0.0)
        pos[i] = 0.0
        total = pos.sum()
        if total > 0:
            matrix[i] = scenario.effective_budgets[i] * pos / total
    return matrix
