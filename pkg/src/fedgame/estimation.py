"""Deposit-data experiments and the per-platform linear performance regression.

Each platform ``i`` runs ``K`` experiments, each mixing in a random fraction
(at most the deposit fraction) of every partner's data, and regresses the
observed metric on those amounts::

    r_hat_i = b_i + sum_{j != i} w_{j,i} * c_{j,i}
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    EstimationConfig,
    FedGameError,
    relabel,
    InsufficientObservations,
    MixedTargets,
    Sampling,
    derive_seed,
    rng_for,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PerformanceObservation:
    target: int
    amounts: np.ndarray
    metric: float


@dataclass(frozen=True)
class RegressionModel:
    target: int
    intercept: float
    weights: np.ndarray
    residual_norm: float = 0.0
    rank_deficient: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w[self.target] = 0.0
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "intercept": self.intercept,
            "weights": [float(x) for x in self.weights],
            "residual_norm": self.residual_norm,
            "rank_deficient": self.rank_deficient,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionModel":
        return cls(
            target=int(d["target"]),
            intercept=float(d["intercept"]),
            weights=np.asarray(d["weights"], dtype=float),
            residual_norm=float(d.get("residual_norm", 0.0)),
            rank_deficient=bool(d.get("rank_deficient", False)),
        )


@dataclass
class EstimationResult:
    models: list
    observations: list = field(default_factory=list)


def design_experiments(config: EstimationConfig, target: int, n: int, seed: int) -> list:
    """Amount vectors for ``config.k`` deposit experiments on platform ``target``."""
    rng = rng_for(seed, "design", target)
    designs = rng.uniform(0.0, config.deposit_fraction, size=(config.k, n))
    designs[:, target] = 0.0
    if config.sampling is Sampling.UNIFORM_WITH_ANCHOR:
        designs[0] = 0.0
    return [row for row in designs]


def fit_regression(observations) -> RegressionModel:
    """Least-squares fit; minimum-norm solution if the design is rank deficient."""
    observations = list(observations)
    if not observations:
        raise InsufficientObservations("no observations")
    targets = {o.target for o in observations}
    if len(targets) > 1:
        raise MixedTargets(f"observations mix targets {sorted(targets)}")
    target = observations[0].target
    n = len(observations[0].amounts)
    partners = [j for j in range(n) if j != target]
    unknowns = len(partners) + 1
    if len(observations) < unknowns:
        raise InsufficientObservations(
            f"{len(observations)} observations for {unknowns} unknowns on platform {target}"
        )

    A = np.ones((len(observations), unknowns))
    A[:, 1:] = np.array([np.asarray(o.amounts, dtype=float)[partners] for o in observations])
    y = np.array([o.metric for o in observations], dtype=float)
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)

    weights = np.zeros(n)
    weights[partners] = coef[1:]
    return RegressionModel(
        target=target,
        intercept=float(coef[0]),
        weights=weights,
        residual_norm=float(np.linalg.norm(A @ coef - y)),
        rank_deficient=bool(rank < unknowns),
    )


def predict(model: RegressionModel, amounts) -> float:
    amounts = np.asarray(amounts, dtype=float)
    mask = np.ones(model.n, dtype=bool)
    mask[model.target] = False
    return float(model.intercept + model.weights[mask] @ amounts[mask])


def _evaluate_one(args):
    oracle, target, amounts, seed = args
    return oracle.evaluate(target, amounts, seed)


def run_estimation(scenario, oracle, seed: int, jobs: int = 1) -> EstimationResult:
    """Fit one regression per platform from ``K`` oracle experiments each.

    ``scenario`` is a validated scenario; only ``n_platforms`` and
    ``estimation`` are read. Experiment seeds depend only on
    ``(seed, platform, experiment)``, so ``jobs`` never changes the result.
    """
    n = scenario.n_platforms
    config = scenario.estimation
    tasks = []
    for i in range(n):
        for k, amounts in enumerate(design_experiments(config, i, n, seed)):
            tasks.append((i, k, amounts))

    payload = [(oracle, i, a, derive_seed(seed, "experiment", i, k)) for i, k, a in tasks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            metrics = list(pool.map(_evaluate_one, payload))
    else:
        metrics = []
        for (i, k, _), args in zip(tasks, payload):
            try:
                metrics.append(_evaluate_one(args))
            except FedGameError as exc:
                raise relabel(exc, f"platform {i}, experiment {k}") from exc

    models, observations = [], []
    for i in range(n):
        obs = [
            PerformanceObservation(t, a, m)
            for (t, _, a), m in zip(tasks, metrics)
            if t == i
        ]
        try:
            models.append(fit_regression(obs))
        except FedGameError as exc:
            raise relabel(exc, f"platform {i}") from exc
        observations.extend(obs)
        log.debug("platform %d: b=%.6g w=%s", i, models[-1].intercept, models[-1].weights)
    return EstimationResult(models=models, observations=observations)


def write_observations_csv(path, observations, n: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["platform", "experiment"] + [f"c_{j}" for j in range(n)] + ["metric"])
        counters: dict = {}
        for o in observations:
            k = counters.get(o.target, 0)
            counters[o.target] = k + 1
            writer.writerow([o.target, k] + [repr(float(a)) for a in o.amounts] + [repr(float(o.metric))])


def write_coefficients_csv(path, models) -> None:
    """Row ``i`` holds platform ``i``'s intercept and weights ``w_{j,i}``."""
    n = len(models)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["platform", "intercept"] + [f"w_{j}" for j in range(n)])
        for m in models:
            writer.writerow([m.target, repr(m.intercept)] + [repr(float(w)) for w in m.weights])


def read_coefficients_csv(path) -> list:
    models = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = len(header) - 2
        for row in reader:
            if not row:
                continue
            models.append(
                RegressionModel(
                    target=int(row[0]),
                    intercept=float(row[1]),
                    weights=np.array([float(x) for x in row[2 : 2 + n]]),
                )
            )
    return models
