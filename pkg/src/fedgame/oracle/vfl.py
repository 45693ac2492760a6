"""Desk-scale vertical federated learning oracle.

The VFL transport (passing hidden representations and gradients) is not
simulated: the target platform trains one logistic regression on its own
block concatenated with partner blocks, where partner rows outside the
allocated fraction are zeroed. After z-scoring, zero is the column mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import rng_for
from .data import VerticalDataset
from .logreg import TrainConfig, train_and_score

SAME_FRACTION = "same_fraction"
FULL = "full"


def kept_count(fraction: float, n: int) -> int:
    # round() first so that e.g. 0.07 * 100 = 7.000000000000001 keeps 7 rows.
    return min(n, math.ceil(round(fraction * n, 9)))


def kept_rows(indices, fraction: float, seed: int, target: int, partner: int, split: str) -> np.ndarray:
    """Prefix of a seeded permutation, so larger fractions only add rows."""
    indices = np.asarray(indices)
    perm = rng_for(seed, "mask", target, partner, split).permutation(len(indices))
    return indices[perm[: kept_count(fraction, len(indices))]]


def mask_partner_block(dataset: VerticalDataset, target: int, partner: int, fraction: float, seed: int,
                       mask_test: bool = True) -> VerticalDataset:
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    if fraction >= 1.0:
        return dataset
    block = dataset.blocks[partner]
    keep = np.zeros(dataset.n_samples, dtype=bool)
    keep[kept_rows(dataset.train_idx, fraction, seed, target, partner, "train")] = True
    if mask_test:
        keep[kept_rows(dataset.test_idx, fraction, seed, target, partner, "test")] = True
    else:
        keep[dataset.test_idx] = True
    masked = np.where(keep[:, None], block, 0.0)
    return dataset.with_block(partner, masked)


def design_matrix(dataset: VerticalDataset, target: int) -> np.ndarray:
    """Own block first, partners in index order."""
    order = [target] + [p for p in range(dataset.n_platforms) if p != target]
    return np.hstack([dataset.blocks[p] for p in order])


def train_local_model(dataset: VerticalDataset, target: int, config: TrainConfig):
    X = design_matrix(dataset, target)
    y = dataset.labels[target]
    n_classes = int(y.max()) + 1
    return train_and_score(
        X[dataset.train_idx], y[dataset.train_idx], X[dataset.test_idx], y[dataset.test_idx], config, n_classes
    )


@dataclass(frozen=True)
class VflTabularSpec:
    dataset: object  # GeneratedDataSpec or CsvDataSpec
    train_epochs: int = 300
    learning_rate: float = 0.5
    l2: float = 0.0
    test_split: float = 0.3
    metric: str = "accuracy"
    test_masking: str = SAME_FRACTION

    def __post_init__(self):
        if not 0 < self.test_split < 1:
            raise ValueError("test_split must lie in (0, 1)")
        if self.test_masking not in (SAME_FRACTION, FULL):
            raise ValueError(f"unknown test_masking {self.test_masking!r}")

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(self.train_epochs, self.learning_rate, self.l2, self.metric)


class VflTabularOracle:
    """Trains platform ``target``'s classifier with partner data limited to ``amounts``.

    Partner rows are chosen from a pool fixed by ``pool_seed``, so the
    deposit rows used during estimation are a subset of the rows used at
    any larger final allocation. Training itself is deterministic, which
    makes ``evaluate`` independent of its per-call seed.
    """

    def __init__(self, dataset: VerticalDataset, spec: VflTabularSpec, pool_seed: int):
        self.dataset = dataset
        self.spec = spec
        self.pool_seed = pool_seed
        self.n = dataset.n_platforms

    def masked(self, target: int, amounts) -> VerticalDataset:
        ds = self.dataset
        for partner in range(self.n):
            if partner == target:
                continue
            ds = mask_partner_block(ds, target, partner, float(amounts[partner]), self.pool_seed,
                                    mask_test=self.spec.test_masking == SAME_FRACTION)
        return ds

    def evaluate(self, target: int, amounts, seed: int) -> float:
        _, metric = train_local_model(self.masked(target, amounts), target, self.spec.train_config)
        return metric
