"""Domain types and invariant checks shared across the package.

Quota matrices and policies are plain ``numpy`` arrays. Row ``i`` of a quota
matrix is platform ``i``'s policy: entry ``[i, j]`` is the fraction of
platform ``i``'s training set it offers to platform ``j``. Column ``i`` is
therefore the vector of data amounts platform ``i`` receives.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

BUDGET_TOL = 1e-12


class FedGameError(Exception):
    """Base class for all errors raised by this package."""

    def __reduce__(self):
        # Rebuild without calling __init__, so subclasses with richer
        # signatures survive the trip back from worker processes.
        return (_rebuild_error, (type(self), self.args, self.__dict__))


def _rebuild_error(cls, args, state):
    exc = cls.__new__(cls)
    exc.args = args
    exc.__dict__.update(state)
    return exc


def relabel(exc: FedGameError, prefix: str) -> FedGameError:
    """Same error type and attributes, message prefixed with ``prefix``."""
    return _rebuild_error(type(exc), (f"{prefix}: {exc}",), exc.__dict__)


class InvalidConfig(FedGameError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class OracleFailure(FedGameError):
    pass


class DegenerateLabels(OracleFailure):
    pass


class ParseError(FedGameError):
    def __init__(self, path, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class SchemaMismatch(FedGameError):
    pass


class InsufficientObservations(FedGameError):
    pass


class MixedTargets(FedGameError):
    pass


class NonFiniteGradient(FedGameError):
    pass


class CoalitionTooLarge(FedGameError):
    pass


class Norm(str, Enum):
    L2 = "l2"
    LINF = "linf"


class Sampling(str, Enum):
    UNIFORM_WITH_ANCHOR = "uniform_with_anchor"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class Budget:
    """A platform's privacy budget in normalized units (1.0 = full training set)."""

    total: float = 1.0
    deposit_fraction: float = 0.0
    count_deposit: bool = True


def effective_budget(budget: Budget, n: int) -> float:
    """Budget left for negotiated quotas once deposit data is accounted for."""
    if budget.total < 0:
        raise InvalidConfig("budgets", f"total must be >= 0, got {budget.total}")
    if not budget.count_deposit:
        return float(budget.total)
    spent = budget.deposit_fraction * (n - 1)
    remaining = budget.total - spent
    if remaining < 0:
        raise InvalidConfig(
            "budgets",
            f"deposit {budget.deposit_fraction} x {n - 1} partners = {spent:g} "
            f"exceeds budget total {budget.total:g}",
        )
    return float(remaining)


@dataclass(frozen=True)
class GameHyperparams:
    gamma: float = 2.5
    eta: float = 0.01
    epsilon: float = 1e-8
    mu: float = 1e-4
    max_rounds: int = 10_000
    norm: Norm = Norm.L2


@dataclass(frozen=True)
class EstimationConfig:
    k: int = 5
    deposit_fraction: float = 0.05
    sampling: Sampling = Sampling.UNIFORM_WITH_ANCHOR


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of labels and integers.

    Used wherever a stage needs its own stream: the result depends only on
    the parts, never on call order or process, so parallel and sequential
    runs draw identical numbers.
    """
    text = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def check_policy(policy: np.ndarray, owner: int, budget: float, tol: float = BUDGET_TOL) -> None:
    """Raise ``ValueError`` if ``policy`` breaks a policy invariant."""
    policy = np.asarray(policy, dtype=float)
    if policy[owner] != 0.0:
        raise ValueError(f"platform {owner} offers {policy[owner]} to itself")
    if np.any(policy < 0):
        raise ValueError(f"platform {owner} has a negative quota: {policy}")
    if policy.sum() > budget + tol:
        raise ValueError(f"platform {owner} quotas sum to {policy.sum()} > budget {budget}")


def check_quota_matrix(matrix: np.ndarray, budgets, tol: float = BUDGET_TOL) -> None:
    matrix = np.asarray(matrix, dtype=float)
    n = len(budgets)
    if matrix.shape != (n, n):
        raise ValueError(f"quota matrix has shape {matrix.shape}, expected {(n, n)}")
    for i in range(n):
        check_policy(matrix[i], i, budgets[i], tol)


def incoming(matrix: np.ndarray, target: int) -> np.ndarray:
    """Amounts platform ``target`` receives from each partner (column ``target``)."""
    column = np.array(matrix[:, target], dtype=float)
    column[target] = 0.0
    return column
