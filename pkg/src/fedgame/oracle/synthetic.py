"""Closed-form performance oracle with known ground-truth coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import rng_for

LINEAR = "linear"
CONCAVE = "concave"


@dataclass(frozen=True)
class SyntheticSpec:
    """``weights[i][j]`` is the true value of partner ``j``'s data to platform ``i``."""

    intercepts: tuple
    weights: tuple
    shape: str = LINEAR
    alpha: float = 1.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "intercepts", tuple(float(x) for x in self.intercepts))
        object.__setattr__(self, "weights", tuple(tuple(float(x) for x in row) for row in self.weights))
        n = len(self.intercepts)
        if any(len(row) != n for row in self.weights) or len(self.weights) != n:
            raise ValueError(f"weights must be {n}x{n}")
        if self.shape not in (LINEAR, CONCAVE):
            raise ValueError(f"unknown response shape {self.shape!r}")
        if self.shape == CONCAVE and not 0 < self.alpha <= 1:
            raise ValueError("concave alpha must lie in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


class SyntheticOracle:
    """``metric_i = b_i + sum_j w_{j,i} g(c_{j,i}) + noise`` with ``g(x) = x`` or ``x**alpha``."""

    def __init__(self, spec: SyntheticSpec):
        self.spec = spec
        self.intercepts = np.array(spec.intercepts)
        self.weights = np.array(spec.weights)
        self.n = len(self.intercepts)

    def response(self, amounts) -> np.ndarray:
        amounts = np.asarray(amounts, dtype=float)
        if self.spec.shape == CONCAVE:
            return amounts ** self.spec.alpha
        return amounts

    def expected(self, target: int, amounts) -> float:
        g = self.response(amounts)
        w = self.weights[target].copy()
        w[target] = 0.0
        return float(self.intercepts[target] + w @ g)

    def evaluate(self, target: int, amounts, seed: int) -> float:
        value = self.expected(target, amounts)
        if self.spec.noise_sigma > 0:
            value += self.spec.noise_sigma * rng_for(seed, "synthetic-noise", target).standard_normal()
        return value
