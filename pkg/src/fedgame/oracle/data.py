"""Vertically partitioned tabular data: CSV ingestion and a synthetic generator."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from ..core import ParseError, SchemaMismatch, rng_for

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    type: str = NUMERIC
    platform: int | None = None
    label: bool = False
    drop: bool = False

    def __post_init__(self):
        if self.type not in (NUMERIC, CATEGORICAL):
            raise SchemaMismatch(f"column {self.name!r}: unknown type {self.type!r}")


@dataclass(frozen=True)
class ColumnSchema:
    columns: tuple
    header: bool = False
    missing: str = "?"
    comment_prefix: str | None = None
    strip_trailing_period: bool = False

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate column names in schema: {names}")
        platforms = self.platforms
        for p in platforms:
            labels = [c.name for c in self.columns if c.platform == p and c.label and not c.drop]
            if len(labels) != 1:
                raise SchemaMismatch(f"platform {p} must have exactly one label column, has {labels}")
        if platforms != list(range(len(platforms))):
            raise SchemaMismatch(f"platform indices must be 0..N-1, got {platforms}")

    @property
    def platforms(self) -> list:
        return sorted({c.platform for c in self.columns if c.platform is not None and not c.drop})

    def to_dict(self) -> dict:
        return {
            "columns": [
                {"name": c.name, "type": c.type, "platform": c.platform, "label": c.label, "drop": c.drop}
                for c in self.columns
            ],
            "header": self.header,
            "missing": self.missing,
            "comment_prefix": self.comment_prefix,
            "strip_trailing_period": self.strip_trailing_period,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnSchema":
        return cls(
            columns=tuple(ColumnSpec(**c) for c in d["columns"]),
            header=bool(d.get("header", False)),
            missing=d.get("missing", "?"),
            comment_prefix=d.get("comment_prefix"),
            strip_trailing_period=bool(d.get("strip_trailing_period", False)),
        )


@dataclass(frozen=True)
class VerticalDataset:
    """Aligned samples split column-wise across platforms.

    ``blocks[p]`` is platform ``p``'s feature matrix (rows aligned across
    platforms), ``labels[p]`` its own task labels as class indices.
    """

    blocks: tuple
    labels: tuple
    train_idx: np.ndarray
    test_idx: np.ndarray
    feature_names: tuple = field(default=())
    class_names: tuple = field(default=())

    def __post_init__(self):
        n = {b.shape[0] for b in self.blocks} | {len(y) for y in self.labels}
        if len(n) != 1:
            raise ValueError(f"blocks and labels disagree on sample count: {sorted(n)}")

    @property
    def n_platforms(self) -> int:
        return len(self.blocks)

    @property
    def n_samples(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def n_train(self) -> int:
        return len(self.train_idx)

    @property
    def n_test(self) -> int:
        return len(self.test_idx)

    def with_block(self, platform: int, block: np.ndarray) -> "VerticalDataset":
        blocks = list(self.blocks)
        blocks[platform] = block
        return replace(self, blocks=tuple(blocks))


# ---------------------------------------------------------------- CSV loading


def _read_rows(path, schema: ColumnSchema):
    rows, lines = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, skipinitialspace=True)
        header = None
        for row in reader:
            line = reader.line_num
            if not row or all(not v.strip() for v in row):
                continue
            if schema.comment_prefix and row[0].startswith(schema.comment_prefix):
                continue
            row = [v.strip() for v in row]
            if schema.header and header is None:
                header = row
                continue
            rows.append(row)
            lines.append(line)
    return header, rows, lines


def _order_columns(path, header, schema: ColumnSchema) -> list:
    """Index of each schema column within the file's rows."""
    names = [c.name for c in schema.columns]
    if header is None:
        return list(range(len(names)))
    unknown = [h for h in header if h not in names]
    missing = [n for n in names if n not in header]
    if unknown or missing:
        raise SchemaMismatch(f"{path}: unknown columns {unknown}, missing columns {missing}")
    return [header.index(n) for n in names]


def _parse_file(path, schema: ColumnSchema):
    header, rows, lines = _read_rows(path, schema)
    order = _order_columns(path, header, schema)
    width = len(header) if header is not None else len(schema.columns)
    table = []
    for row, line in zip(rows, lines):
        if len(row) != width:
            raise ParseError(path, line, f"expected {width} fields, got {len(row)}")
        values = []
        for spec, idx in zip(schema.columns, order):
            raw = row[idx]
            if schema.strip_trailing_period and raw.endswith("."):
                raw = raw[:-1]
            if raw == schema.missing or raw == "":
                values.append(None)
            elif spec.type == NUMERIC and not spec.label:
                try:
                    values.append(float(raw))
                except ValueError:
                    raise ParseError(path, line, f"column {spec.name!r}: not a number: {raw!r}") from None
            else:
                values.append(raw)
        table.append(values)
    return table


def _majority(values):
    present = [v for v in values if v is not None]
    if not present:
        return None
    uniq, counts = np.unique(np.array(present, dtype=object).astype(str), return_counts=True)
    # np.unique sorts, so ties go to the lexicographically first class.
    return str(uniq[np.argmax(counts)])


def load_csv_dataset(paths, schema: ColumnSchema, seed: int, test_split: float = 0.3, standardize: bool = True):
    """Load one CSV (split by ``test_split``) or a ``(train, test)`` pair of CSVs.

    Numeric features are z-scored and categorical features one-hot encoded,
    with all statistics taken from the training split. Missing numerics get
    the training mean, missing categoricals the training majority class.
    """
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    paths = list(paths)
    tables = [_parse_file(p, schema) for p in paths]
    data = [row for t in tables for row in t]
    n = len(data)
    if len(paths) == 1:
        perm = rng_for(seed, "split").permutation(n)
        n_test = int(round(test_split * n))
        test_idx, train_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    elif len(paths) == 2:
        n_train = len(tables[0])
        train_idx, test_idx = np.arange(n_train), np.arange(n_train, n)
    else:
        raise ValueError(f"expected one or two CSV paths, got {len(paths)}")

    columns = list(zip(*data)) if data else [() for _ in schema.columns]
    n_platforms = len(schema.platforms)
    blocks = [[] for _ in range(n_platforms)]
    names = [[] for _ in range(n_platforms)]
    labels = [None] * n_platforms
    class_names = [None] * n_platforms

    for spec, col in zip(schema.columns, columns):
        if spec.drop or spec.platform is None:
            continue
        train_vals = [col[i] for i in train_idx]
        if spec.label:
            fill = _majority(train_vals)
            vals = np.array([str(v) if v is not None else fill for v in col], dtype=object)
            classes = sorted(set(vals[train_idx].tolist()))
            lookup = {c: k for k, c in enumerate(classes)}
            # Test-only classes can never be predicted; map them past the end.
            extra = sorted(set(vals.tolist()) - set(classes))
            lookup.update({c: len(classes) + k for k, c in enumerate(extra)})
            labels[spec.platform] = np.array([lookup[v] for v in vals], dtype=int)
            class_names[spec.platform] = tuple(classes + extra)
        elif spec.type == NUMERIC:
            arr = np.array([np.nan if v is None else v for v in col], dtype=float)
            mean = np.nanmean(arr[train_idx]) if np.any(~np.isnan(arr[train_idx])) else 0.0
            arr = np.where(np.isnan(arr), mean, arr)
            if standardize:
                std = arr[train_idx].std()
                arr = (arr - mean) / (std if std > 0 else 1.0)
            blocks[spec.platform].append(arr[:, None])
            names[spec.platform].append(spec.name)
        else:
            fill = _majority(train_vals)
            vals = [fill if v is None else v for v in col]
            cats = sorted({vals[i] for i in train_idx})
            onehot = np.zeros((n, len(cats)))
            index = {c: k for k, c in enumerate(cats)}
            for r, v in enumerate(vals):
                k = index.get(v)
                if k is not None:
                    onehot[r, k] = 1.0
            blocks[spec.platform].append(onehot)
            names[spec.platform].extend(f"{spec.name}={c}" for c in cats)

    return VerticalDataset(
        blocks=tuple(np.hstack(b) if b else np.zeros((n, 0)) for b in blocks),
        labels=tuple(labels),
        train_idx=train_idx,
        test_idx=test_idx,
        feature_names=tuple(tuple(x) for x in names),
        class_names=tuple(class_names),
    )


ADULT_COLUMNS = [
    ("age", NUMERIC, 0),
    ("workclass", CATEGORICAL, 0),
    ("fnlwgt", NUMERIC, 0),
    ("education", CATEGORICAL, 0),
    ("education-num", NUMERIC, 0),
    ("marital-status", CATEGORICAL, 1),
    ("occupation", CATEGORICAL, 1),
    ("relationship", CATEGORICAL, 1),
    ("race", CATEGORICAL, 1),
    ("sex", CATEGORICAL, 1),
    ("capital-gain", NUMERIC, 2),
    ("capital-loss", NUMERIC, 2),
    ("hours-per-week", NUMERIC, 2),
    ("native-country", CATEGORICAL, 2),
    ("income", CATEGORICAL, 2),
]


def adult_schema() -> ColumnSchema:
    """Three-platform partition of the UCI Adult columns.

    Labels are education, sex and income; education-num is dropped because
    it encodes the education label.
    """
    labels = {"education", "sex", "income"}
    cols = tuple(
        ColumnSpec(name, kind, platform, label=name in labels, drop=name == "education-num")
        for name, kind, platform in ADULT_COLUMNS
    )
    return ColumnSchema(cols, header=False, missing="?", comment_prefix="|", strip_trailing_period=True)


# ------------------------------------------------------------ synthetic data


@dataclass(frozen=True)
class GeneratedDataSpec:
    """Parameters for a synthetic vertically partitioned binary-task dataset.

    ``signal[i][b]`` scales block ``b``'s contribution to platform ``i``'s
    label logit; a column of zeros (off the diagonal) makes block ``b`` pure
    noise for every other platform.
    """

    n_platforms: int = 3
    n_samples: int = 2000
    features_per_block: int = 5
    signal: tuple | None = None
    seed: int | None = None

    def signal_matrix(self) -> np.ndarray:
        if self.signal is None:
            s = np.full((self.n_platforms, self.n_platforms), 1.0)
            np.fill_diagonal(s, 1.5)
            return s
        s = np.asarray(self.signal, dtype=float)
        if s.shape != (self.n_platforms, self.n_platforms):
            raise ValueError(f"signal must be {self.n_platforms}x{self.n_platforms}")
        return s


def generate_vertical_dataset(spec: GeneratedDataSpec, seed: int, test_split: float = 0.3) -> VerticalDataset:
    if spec.seed is not None:
        seed = spec.seed
    n, f, N = spec.n_samples, spec.features_per_block, spec.n_platforms
    rng = rng_for(seed, "generate")
    blocks = [rng.standard_normal((n, f)) for _ in range(N)]
    signal = spec.signal_matrix()
    labels = []
    for i in range(N):
        logit = np.zeros(n)
        for b in range(N):
            direction = rng.standard_normal(f)
            direction /= np.linalg.norm(direction)
            logit += signal[i, b] * (blocks[b] @ direction)
        labels.append((rng.uniform(size=n) < 1 / (1 + np.exp(-logit))).astype(int))
    perm = rng.permutation(n)
    n_test = int(round(test_split * n))
    return VerticalDataset(
        blocks=tuple(blocks),
        labels=tuple(labels),
        train_idx=np.sort(perm[n_test:]),
        test_idx=np.sort(perm[:n_test]),
        feature_names=tuple(tuple(f"x{p}_{k}" for k in range(f)) for p in range(N)),
        class_names=tuple(("0", "1") for _ in range(N)),
    )
