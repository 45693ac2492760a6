"""Scenario configuration: dataclasses, validation, and JSON round-tripping.

Config document layout (JSON)::

    {
      "n_platforms": 3,
      "budgets": [1.0, 1.0, 1.0],          # totals, normalized (1 = full dataset)
      "count_deposit": true,               # deposit data consumes budget
      "seed": 0,
      "game": {"gamma": 2.5, "eta": 0.01, "epsilon": 1e-8, "mu": 1e-4,
               "max_rounds": 10000, "norm": "l2", "init": "uniform"},
      "estimation": {"k": 5, "deposit_fraction": 0.05,
                     "sampling": "uniform_with_anchor"},
      "oracle": {"kind": "synthetic", ...} | {"kind": "vfl_tabular", ...}
    }
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

from .core import (
    Budget,
    EstimationConfig,
    GameHyperparams,
    InvalidConfig,
    Norm,
    Sampling,
    effective_budget,
)
from .oracle import (
    ColumnSchema,
    CsvDataSpec,
    GeneratedDataSpec,
    SyntheticSpec,
    VflTabularSpec,
)

INIT_MODES = ("uniform", "zero", "random")

CONFIG_KEYS = """\
config keys (JSON document):
  n_platforms                 number of platforms N (>= 2)
  budgets                     list of N budget totals (normalized; default all 1.0)
  count_deposit               deposit data consumes budget (default true)
  seed                        master seed (default 0; --seed overrides)
  game.gamma                  output/input preference exponent (default 2.5)
  game.eta                    game learning rate (default 0.01)
  game.epsilon                division guard (default 1e-8)
  game.mu                     convergence threshold on policy change (default 1e-4)
  game.max_rounds             negotiation round cap (default 10000)
  game.norm                   l2 | linf (default l2)
  game.init                   uniform | zero | random (default uniform)
  estimation.k                deposit experiments per platform, >= N (default 5)
  estimation.deposit_fraction deposit size as a fraction of each dataset (default 0.05)
  estimation.sampling         uniform_with_anchor | uniform
  oracle.kind                 synthetic | vfl_tabular
  oracle.intercepts           [synthetic] N true intercepts
  oracle.weights              [synthetic] NxN, row i = value of each partner to platform i
  oracle.shape                [synthetic] linear | concave
  oracle.alpha                [synthetic] concave exponent in (0, 1]
  oracle.noise_sigma          [synthetic] Gaussian metric noise (default 0)
  oracle.dataset.source       [vfl_tabular] generated | csv
  oracle.dataset.n_samples, features_per_block, signal, seed      [generated]
  oracle.dataset.paths, schema.columns[{name,type,platform,label,drop}],
    schema.header, schema.missing, schema.comment_prefix,
    schema.strip_trailing_period                                  [csv]
  oracle.train_epochs, learning_rate, l2, test_split,
    metric (accuracy | auc), test_masking (same_fraction | full)  [vfl_tabular]
"""


@dataclass(frozen=True)
class ScenarioConfig:
    n_platforms: int = 3
    budgets: tuple = ()
    count_deposit: bool = True
    game: GameHyperparams = field(default_factory=GameHyperparams)
    init: str = "uniform"
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    oracle: object = None
    seed: int = 0

    def budget(self, i: int) -> Budget:
        return Budget(self.budgets[i], self.estimation.deposit_fraction, self.count_deposit)


@dataclass(frozen=True)
class ValidatedScenario:
    config: ScenarioConfig
    effective_budgets: tuple

    @property
    def n_platforms(self) -> int:
        return self.config.n_platforms

    @property
    def game(self) -> GameHyperparams:
        return self.config.game

    @property
    def estimation(self) -> EstimationConfig:
        return self.config.estimation

    @property
    def oracle(self):
        return self.config.oracle

    @property
    def seed(self) -> int:
        return self.config.seed


def _positive(key, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidConfig(key, f"must be a positive number, got {value!r}")


def validate_scenario(config) -> ValidatedScenario:
    if isinstance(config, ValidatedScenario):
        config = config.config
    n = config.n_platforms
    if not isinstance(n, int) or n < 2:
        raise InvalidConfig("n_platforms", f"need at least 2 platforms, got {n!r}")
    if len(config.budgets) != n:
        raise InvalidConfig("budgets", f"expected {n} budgets, got {len(config.budgets)}")
    g = config.game
    for key in ("gamma", "eta", "epsilon", "mu"):
        _positive(f"game.{key}", getattr(g, key))
    if not isinstance(g.max_rounds, int) or g.max_rounds < 0:
        raise InvalidConfig("game.max_rounds", f"must be a non-negative integer, got {g.max_rounds!r}")
    if config.init not in INIT_MODES:
        raise InvalidConfig("game.init", f"must be one of {INIT_MODES}, got {config.init!r}")
    e = config.estimation
    if not isinstance(e.k, int) or e.k < n:
        raise InvalidConfig("estimation.k", f"need k >= {n} experiments for {n} unknowns, got {e.k!r}")
    if not 0 <= e.deposit_fraction <= 1:
        raise InvalidConfig("estimation.deposit_fraction", f"must lie in [0, 1], got {e.deposit_fraction!r}")
    effective = []
    for i in range(n):
        try:
            effective.append(effective_budget(config.budget(i), n))
        except InvalidConfig as exc:
            raise InvalidConfig(f"budgets[{i}]", str(exc).split(": ", 1)[-1]) from None
    if config.oracle is None:
        raise InvalidConfig("oracle", "missing oracle section")
    oracle_n = _oracle_platforms(config.oracle)
    if oracle_n is not None and oracle_n != n:
        raise InvalidConfig("oracle", f"oracle describes {oracle_n} platforms, scenario has {n}")
    return ValidatedScenario(config, tuple(effective))


def _oracle_platforms(spec):
    if isinstance(spec, SyntheticSpec):
        return len(spec.intercepts)
    if isinstance(spec, VflTabularSpec):
        if isinstance(spec.dataset, GeneratedDataSpec):
            return spec.dataset.n_platforms
        if isinstance(spec.dataset, CsvDataSpec):
            return len(spec.dataset.schema.platforms)
    return None


# ------------------------------------------------------------- parsing


def _take(d: dict, key: str, prefix: str, default, cast):
    if key not in d:
        return default
    try:
        return cast(d[key])
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{prefix}{key}", f"bad value {d[key]!r} ({exc})") from None


def _check_keys(d: dict, allowed, prefix: str):
    if not isinstance(d, dict):
        raise InvalidConfig(prefix.rstrip(".") or "<root>", "expected a mapping")
    for key in d:
        if key not in allowed:
            raise InvalidConfig(f"{prefix}{key}", "unknown key")


def _strict_int(x):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValueError("expected an integer")
    return x


def _strict_bool(x):
    if not isinstance(x, bool):
        raise ValueError("expected true or false")
    return x


def _parse_oracle(d: dict):
    _check_keys(d, {"kind", "intercepts", "weights", "shape", "alpha", "noise_sigma", "dataset",
                    "train_epochs", "learning_rate", "l2", "test_split", "metric", "test_masking"}, "oracle.")
    kind = d.get("kind")
    try:
        if kind == "synthetic":
            if "intercepts" not in d or "weights" not in d:
                raise InvalidConfig("oracle.weights", "synthetic oracle needs intercepts and weights")
            return SyntheticSpec(
                intercepts=tuple(d["intercepts"]),
                weights=tuple(tuple(r) for r in d["weights"]),
                shape=d.get("shape", "linear"),
                alpha=float(d.get("alpha", 1.0)),
                noise_sigma=float(d.get("noise_sigma", 0.0)),
            )
        if kind == "vfl_tabular":
            ds = d.get("dataset")
            if not isinstance(ds, dict):
                raise InvalidConfig("oracle.dataset", "missing dataset section")
            source = ds.get("source")
            if source == "generated":
                _check_keys(ds, {"source", "n_platforms", "n_samples", "features_per_block", "signal", "seed"},
                            "oracle.dataset.")
                data = GeneratedDataSpec(
                    n_platforms=_take(ds, "n_platforms", "oracle.dataset.", 3, _strict_int),
                    n_samples=_take(ds, "n_samples", "oracle.dataset.", 2000, _strict_int),
                    features_per_block=_take(ds, "features_per_block", "oracle.dataset.", 5, _strict_int),
                    signal=None if ds.get("signal") is None else tuple(tuple(float(x) for x in r) for r in ds["signal"]),
                    seed=ds.get("seed"),
                )
            elif source == "csv":
                _check_keys(ds, {"source", "paths", "schema", "seed"}, "oracle.dataset.")
                if "schema" not in ds:
                    raise InvalidConfig("oracle.dataset.schema", "csv dataset needs a schema")
                data = CsvDataSpec(
                    paths=tuple(ds.get("paths", ())),
                    schema=ColumnSchema.from_dict(ds["schema"]),
                    seed=ds.get("seed"),
                )
                if not data.paths:
                    raise InvalidConfig("oracle.dataset.paths", "csv dataset needs at least one path")
            else:
                raise InvalidConfig("oracle.dataset.source", f"must be generated or csv, got {source!r}")
            metric = d.get("metric", "accuracy")
            if metric not in ("accuracy", "auc"):
                raise InvalidConfig("oracle.metric", f"must be accuracy or auc, got {metric!r}")
            return VflTabularSpec(
                dataset=data,
                train_epochs=_take(d, "train_epochs", "oracle.", 300, _strict_int),
                learning_rate=_take(d, "learning_rate", "oracle.", 0.5, float),
                l2=_take(d, "l2", "oracle.", 0.0, float),
                test_split=_take(d, "test_split", "oracle.", 0.3, float),
                metric=metric,
                test_masking=d.get("test_masking", "same_fraction"),
            )
    except InvalidConfig:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise InvalidConfig("oracle", str(exc)) from None
    raise InvalidConfig("oracle.kind", f"must be synthetic or vfl_tabular, got {kind!r}")


def scenario_from_dict(d: dict) -> ScenarioConfig:
    _check_keys(d, {"n_platforms", "budgets", "count_deposit", "seed", "game", "estimation", "oracle"}, "")
    if "n_platforms" not in d:
        raise InvalidConfig("n_platforms", "missing")
    n = _take(d, "n_platforms", "", None, _strict_int)
    budgets = d.get("budgets", [1.0] * n)
    if not isinstance(budgets, list):
        raise InvalidConfig("budgets", "expected a list of numbers")
    try:
        budgets = tuple(float(b["total"]) if isinstance(b, dict) else float(b) for b in budgets)
    except (TypeError, ValueError, KeyError) as exc:
        raise InvalidConfig("budgets", f"bad entry ({exc})") from None

    gd = d.get("game", {})
    _check_keys(gd, {"gamma", "eta", "epsilon", "mu", "max_rounds", "norm", "init"}, "game.")
    defaults = GameHyperparams()
    try:
        norm = Norm(gd.get("norm", "l2"))
    except ValueError:
        raise InvalidConfig("game.norm", f"must be l2 or linf, got {gd.get('norm')!r}") from None
    game = GameHyperparams(
        gamma=_take(gd, "gamma", "game.", defaults.gamma, float),
        eta=_take(gd, "eta", "game.", defaults.eta, float),
        epsilon=_take(gd, "epsilon", "game.", defaults.epsilon, float),
        mu=_take(gd, "mu", "game.", defaults.mu, float),
        max_rounds=_take(gd, "max_rounds", "game.", defaults.max_rounds, _strict_int),
        norm=norm,
    )

    ed = d.get("estimation", {})
    _check_keys(ed, {"k", "deposit_fraction", "sampling"}, "estimation.")
    try:
        sampling = Sampling(ed.get("sampling", "uniform_with_anchor"))
    except ValueError:
        raise InvalidConfig("estimation.sampling", f"unknown sampling {ed.get('sampling')!r}") from None
    estimation = EstimationConfig(
        k=_take(ed, "k", "estimation.", 5, _strict_int),
        deposit_fraction=_take(ed, "deposit_fraction", "estimation.", 0.05, float),
        sampling=sampling,
    )
    if "oracle" not in d:
        raise InvalidConfig("oracle", "missing oracle section")
    return ScenarioConfig(
        n_platforms=n,
        budgets=budgets,
        count_deposit=_take(d, "count_deposit", "", True, _strict_bool),
        game=game,
        init=gd.get("init", "uniform"),
        estimation=estimation,
        oracle=_parse_oracle(d["oracle"]),
        seed=_take(d, "seed", "", 0, _strict_int),
    )


def _oracle_to_dict(spec) -> dict:
    if isinstance(spec, SyntheticSpec):
        return {
            "kind": "synthetic",
            "intercepts": list(spec.intercepts),
            "weights": [list(r) for r in spec.weights],
            "shape": spec.shape,
            "alpha": spec.alpha,
            "noise_sigma": spec.noise_sigma,
        }
    data = spec.dataset
    if isinstance(data, GeneratedDataSpec):
        ds = {
            "source": "generated",
            "n_platforms": data.n_platforms,
            "n_samples": data.n_samples,
            "features_per_block": data.features_per_block,
            "signal": None if data.signal is None else [list(r) for r in data.signal],
            "seed": data.seed,
        }
    else:
        ds = {"source": "csv", "paths": [str(p) for p in data.paths], "schema": data.schema.to_dict(),
              "seed": data.seed}
    return {
        "kind": "vfl_tabular",
        "dataset": ds,
        "train_epochs": spec.train_epochs,
        "learning_rate": spec.learning_rate,
        "l2": spec.l2,
        "test_split": spec.test_split,
        "metric": spec.metric,
        "test_masking": spec.test_masking,
    }


def scenario_to_dict(config) -> dict:
    if isinstance(config, ValidatedScenario):
        config = config.config
    g, e = config.game, config.estimation
    return {
        "n_platforms": config.n_platforms,
        "budgets": list(config.budgets),
        "count_deposit": config.count_deposit,
        "seed": config.seed,
        "game": {
            "gamma": g.gamma,
            "eta": g.eta,
            "epsilon": g.epsilon,
            "mu": g.mu,
            "max_rounds": g.max_rounds,
            "norm": Norm(g.norm).value,
            "init": config.init,
        },
        "estimation": {"k": e.k, "deposit_fraction": e.deposit_fraction, "sampling": Sampling(e.sampling).value},
        "oracle": _oracle_to_dict(config.oracle),
    }


def dumps_scenario(config) -> str:
    return json.dumps(scenario_to_dict(config), indent=2, sort_keys=True)


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(str(path), f"not valid JSON: {exc}") from None
    config = scenario_from_dict(doc)
    spec = config.oracle
    if isinstance(spec, VflTabularSpec) and isinstance(spec.dataset, CsvDataSpec):
        # Relative data paths are relative to the config file.
        base = os.path.dirname(os.path.abspath(path))
        paths = tuple(p if os.path.isabs(p) else os.path.join(base, p) for p in spec.dataset.paths)
        config = replace(config, oracle=replace(spec, dataset=replace(spec.dataset, paths=paths)))
    return config


def with_overrides(config: ScenarioConfig, **kw) -> ScenarioConfig:
    """Copy of ``config`` with ``gamma=``, ``deposit_fraction=``, ``seed=`` etc. replaced."""
    game_keys = {"gamma", "eta", "epsilon", "mu", "max_rounds", "norm"}
    est_keys = {"k", "deposit_fraction", "sampling"}
    game = replace(config.game, **{k: v for k, v in kw.items() if k in game_keys})
    est = replace(config.estimation, **{k: v for k, v in kw.items() if k in est_keys})
    rest = {k: v for k, v in kw.items() if k not in game_keys | est_keys}
    return replace(config, game=game, estimation=est, **rest)
