"""Differentiable reward, its gradient, and the projected policy step.

For platform ``i`` with fitted model ``(b_i, w_{.,i})``, incoming amounts
``c_{j,i}`` and its own quotas ``c_{i,j}``::

    r_i = b_i + sum_j (max(w_{j,i}, 0) * c_{j,i}) ** gamma / (c_{i,j} + eps)

A platform gains reward by receiving valuable data while giving away little.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Norm, NonFiniteGradient
from .estimation import RegressionModel


@dataclass(frozen=True)
class RewardParams:
    gamma: float = 2.5
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.gamma > 0 or not self.epsilon > 0:
            raise ValueError("gamma and epsilon must be positive")


@dataclass(frozen=True)
class PolicyDelta:
    platform: int
    norm_value: float
    converged: bool


def _numerators(model: RegressionModel, incoming_amounts, gamma: float) -> np.ndarray:
    w = np.maximum(np.asarray(model.weights, dtype=float), 0.0)
    base = w * np.asarray(incoming_amounts, dtype=float)
    # Negative incoming amounts can't come out of a valid quota matrix, but
    # keep the power real-valued regardless.
    base = np.maximum(base, 0.0)
    out = base ** gamma
    out[model.target] = 0.0
    return out


def reward(model: RegressionModel, incoming_amounts, own_policy, params: RewardParams) -> float:
    num = _numerators(model, incoming_amounts, params.gamma)
    den = np.asarray(own_policy, dtype=float) + params.epsilon
    terms = num / den
    terms[model.target] = 0.0
    return float(model.intercept + terms.sum())


def reward_gradient(model: RegressionModel, incoming_amounts, own_policy, params: RewardParams) -> np.ndarray:
    """Partial derivatives of ``reward`` with respect to the platform's own quotas."""
    num = _numerators(model, incoming_amounts, params.gamma)
    den = np.asarray(own_policy, dtype=float) + params.epsilon
    grad = -num / den**2
    grad[model.target] = 0.0
    return grad


def update_policy(policy, gradient, eta: float) -> np.ndarray:
    gradient = np.asarray(gradient, dtype=float)
    if not np.all(np.isfinite(gradient)):
        raise NonFiniteGradient(f"non-finite gradient component in {gradient}")
    # A step against the gradient of r_i. Every component is <= 0, so
    # quotas only grow here; the budget projection is what trades them off.
    return np.asarray(policy, dtype=float) - eta * gradient


def project_policy(policy, budget: float, owner: int | None = None) -> np.ndarray:
    """Clamp to nonnegative, then rescale by the clamped sum if over budget."""
    clamped = np.maximum(np.asarray(policy, dtype=float), 0.0)
    if owner is not None:
        clamped[owner] = 0.0
    total = clamped.sum()
    if total <= budget:
        return clamped
    scaled = clamped * (budget / total)
    return _exact_sum(scaled, budget)


def _exact_sum(x, budget):
    """Nudge entries by single ulps so that ``x.sum() == budget`` when reachable.

    Rescaling leaves the sum a few ulps off. Moving the largest entry is
    tried first; a smaller entry has finer spacing and can close gaps the
    largest one jumps over. The result never exceeds the budget.
    """
    if x.sum() == budget:
        return x
    for idx in np.argsort(-x, kind="stable"):
        if x[idx] <= 0:
            break
        trial = x.copy()
        for _ in range(64):
            s = trial.sum()
            if s == budget:
                return trial
            trial[idx] = np.nextafter(trial[idx], np.inf if s < budget else 0.0)
            if (trial.sum() > budget) != (s > budget) and trial.sum() != budget:
                break
    top = np.argmax(x)
    while x.sum() > budget:
        x[top] = np.nextafter(x[top], 0.0)
    return x


def policy_delta(old, new, mu: float, norm: Norm = Norm.L2, platform: int = 0) -> PolicyDelta:
    diff = np.asarray(new, dtype=float) - np.asarray(old, dtype=float)
    if Norm(norm) is Norm.LINF:
        value = float(np.max(np.abs(diff))) if diff.size else 0.0
    else:
        value = float(np.linalg.norm(diff))
    return PolicyDelta(platform=platform, norm_value=value, converged=value < mu)


def step(model: RegressionModel, incoming_amounts, own_policy, budget: float, eta: float, params: RewardParams):
    """One local projected-gradient update; returns the new policy."""
    grad = reward_gradient(model, incoming_amounts, own_policy, params)
    raw = update_policy(own_policy, grad, eta)
    return project_policy(raw, budget, owner=model.target)


def concentration(matrix) -> np.ndarray:
    """Largest share of each row's total quota given to a single partner."""
    matrix = np.asarray(matrix, dtype=float)
    totals = matrix.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = matrix.max(axis=1) / totals
    return np.where(totals > 0, share, 0.0)
