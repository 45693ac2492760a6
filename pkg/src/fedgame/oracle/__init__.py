"""Performance oracles: map the data amounts a platform receives to a task metric."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..core import derive_seed
from .data import (
    ColumnSchema,
    ColumnSpec,
    GeneratedDataSpec,
    VerticalDataset,
    adult_schema,
    generate_vertical_dataset,
    load_csv_dataset,
)
from .logreg import TrainConfig
from .synthetic import SyntheticOracle, SyntheticSpec
from .vfl import VflTabularOracle, VflTabularSpec, mask_partner_block, train_local_model


class PerformanceOracle(Protocol):
    n: int

    def evaluate(self, target: int, amounts: np.ndarray, seed: int) -> float: ...


@dataclass(frozen=True)
class CsvDataSpec:
    paths: tuple
    schema: ColumnSchema
    seed: int | None = None


def build_oracle(spec, seed: int):
    """Instantiate the oracle described by ``spec`` for one repetition."""
    if isinstance(spec, SyntheticSpec):
        return SyntheticOracle(spec)
    if isinstance(spec, VflTabularSpec):
        data = spec.dataset
        data_seed = derive_seed(seed, "dataset")
        if isinstance(data, GeneratedDataSpec):
            dataset = generate_vertical_dataset(data, data_seed, spec.test_split)
        elif isinstance(data, CsvDataSpec):
            paths = data.paths[0] if len(data.paths) == 1 else data.paths
            dataset = load_csv_dataset(paths, data.schema, data.seed if data.seed is not None else data_seed,
                                       spec.test_split)
        else:
            raise TypeError(f"unknown dataset source {type(data).__name__}")
        return VflTabularOracle(dataset, spec, derive_seed(seed, "deposit-pool"))
    raise TypeError(f"unknown oracle spec {type(spec).__name__}")


__all__ = [
    "ColumnSchema",
    "ColumnSpec",
    "CsvDataSpec",
    "GeneratedDataSpec",
    "PerformanceOracle",
    "SyntheticOracle",
    "SyntheticSpec",
    "TrainConfig",
    "VerticalDataset",
    "VflTabularOracle",
    "VflTabularSpec",
    "adult_schema",
    "build_oracle",
    "generate_vertical_dataset",
    "load_csv_dataset",
    "mask_partner_block",
    "train_local_model",
]
