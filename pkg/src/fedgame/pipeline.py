"""End-to-end experiments: estimation, every policy, evaluation, aggregation."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import compute_shapley, greedy_policy, local_only_policy, shapley_policy, uniform_policy
from .config import dumps_scenario, scenario_to_dict, validate_scenario, with_overrides
from .core import FedGameError, derive_seed, incoming, relabel
from .estimation import predict, run_estimation, write_coefficients_csv, write_observations_csv
from .game import RewardParams, concentration, reward
from .negotiation import init_policies, run_negotiation, visibility_audit, write_policy_csv
from .oracle import build_oracle

log = logging.getLogger(__name__)

POLICY_NAMES = ("local", "uniform", "greedy", "shapley", "fedgame")
SWEEP_PARAMS = {"gamma": "gamma", "deposit_fraction": "deposit_fraction"}


@dataclass
class PolicyEvaluation:
    policy_name: str
    per_platform_metric: list
    average_metric: float
    per_platform_reward: list | None = None

    def to_dict(self) -> dict:
        return {
            "policy": self.policy_name,
            "per_platform_metric": self.per_platform_metric,
            "average_metric": self.average_metric,
            "per_platform_reward": self.per_platform_reward,
        }


def evaluate_policy(scenario, oracle, matrix, seed: int, name: str = "policy", models=None) -> PolicyEvaluation:
    """Final performance of each platform when it receives its column of ``matrix``.

    The evaluation seed depends on the platform only, so every policy in a
    repetition is scored under the same oracle noise.
    """
    matrix = np.asarray(matrix, dtype=float)
    metrics = [
        float(oracle.evaluate(i, incoming(matrix, i), derive_seed(seed, "evaluate", i)))
        for i in range(scenario.n_platforms)
    ]
    rewards = None
    if models is not None:
        params = RewardParams(scenario.game.gamma, scenario.game.epsilon)
        rewards = [reward(models[i], incoming(matrix, i), matrix[i], params) for i in range(len(models))]
    return PolicyEvaluation(name, metrics, float(np.mean(metrics)), rewards)


@dataclass
class RepetitionResult:
    index: int
    seed: int
    models: list
    observations: list
    policies: dict
    evaluations: dict
    negotiation: object
    audit_violations: int
    prediction_error: float


def run_repetition(scenario, index: int, seed: int) -> RepetitionResult:
    scenario = validate_scenario(scenario)
    oracle = build_oracle(scenario.oracle, seed)
    estimation = run_estimation(scenario, oracle, derive_seed(seed, "estimation"))
    models = estimation.models

    shapley = [
        compute_shapley(i, oracle, scenario.estimation.deposit_fraction, derive_seed(seed, "shapley"))
        for i in range(scenario.n_platforms)
    ]
    init = init_policies(scenario, scenario.config.init, derive_seed(seed, "init"))
    outcome = run_negotiation(scenario, models, init)
    audit = visibility_audit(outcome.transcript)

    policies = {
        "local": local_only_policy(scenario),
        "uniform": uniform_policy(scenario),
        "greedy": greedy_policy(scenario, models),
        "shapley": shapley_policy(scenario, shapley),
        "fedgame": outcome.final_policies,
    }
    eval_seed = derive_seed(seed, "evaluation")
    evaluations = {
        name: evaluate_policy(scenario, oracle, policies[name], eval_seed, name, models) for name in POLICY_NAMES
    }
    uniform = policies["uniform"]
    errors = [
        abs(predict(models[i], incoming(uniform, i)) - evaluations["uniform"].per_platform_metric[i])
        for i in range(scenario.n_platforms)
    ]
    return RepetitionResult(
        index=index,
        seed=seed,
        models=models,
        observations=estimation.observations,
        policies=policies,
        evaluations=evaluations,
        negotiation=outcome,
        audit_violations=len(audit.violations),
        prediction_error=float(np.mean(errors)),
    )


def _repetition_task(args):
    scenario, index, seed = args
    try:
        return run_repetition(scenario, index, seed)
    except FedGameError as exc:
        raise relabel(exc, f"repetition {index}") from exc


@dataclass
class ExperimentReport:
    scenario: dict
    digest: str
    master_seed: int
    repetitions: list

    def summary(self) -> dict:
        out = {}
        for name in POLICY_NAMES:
            metrics = np.array([r.evaluations[name].per_platform_metric for r in self.repetitions])
            averages = np.array([r.evaluations[name].average_metric for r in self.repetitions])
            out[name] = {
                "per_platform_mean": metrics.mean(axis=0).tolist(),
                "per_platform_std": metrics.std(axis=0).tolist(),
                "average_mean": float(averages.mean()),
                "average_std": float(averages.std()),
            }
        return out

    def prediction_error(self) -> tuple:
        errs = np.array([r.prediction_error for r in self.repetitions])
        return float(errs.mean()), float(errs.std())

    def mean_policy(self, name: str) -> np.ndarray:
        return np.mean([r.policies[name] for r in self.repetitions], axis=0)

    def to_dict(self) -> dict:
        err_mean, err_std = self.prediction_error()
        return {
            "scenario": self.scenario,
            "scenario_digest": self.digest,
            "master_seed": self.master_seed,
            "repetition_count": len(self.repetitions),
            "repetitions": [
                {
                    "index": r.index,
                    "seed": r.seed,
                    "coefficients": [m.to_dict() for m in r.models],
                    "policies": {k: np.asarray(v).tolist() for k, v in r.policies.items()},
                    "evaluations": {k: v.to_dict() for k, v in r.evaluations.items()},
                    "negotiation": {
                        **r.negotiation.summary(),
                        "audit_violations": r.audit_violations,
                        "final_deltas": [d.norm_value for d in r.negotiation.transcript.rounds[-1].deltas]
                        if r.negotiation.transcript.rounds else [],
                    },
                    "prediction_error_uniform": r.prediction_error,
                }
                for r in self.repetitions
            ],
            "summary": self.summary(),
            "prediction_error_uniform": {"mean": err_mean, "std": err_std},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def converged(self) -> bool:
        return all(r.negotiation.converged for r in self.repetitions)


def run_full_experiment(scenario, repetitions: int = 5, jobs: int = 1) -> ExperimentReport:
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    scenario = validate_scenario(scenario)
    master = scenario.seed
    tasks = [(scenario, r, derive_seed(master, "repetition", r)) for r in range(repetitions)]
    if jobs > 1 and repetitions > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, repetitions)) as pool:
            results = list(pool.map(_repetition_task, tasks))
    else:
        results = [_repetition_task(t) for t in tasks]
    text = dumps_scenario(scenario)
    return ExperimentReport(
        scenario=scenario_to_dict(scenario),
        digest=hashlib.sha256(text.encode()).hexdigest(),
        master_seed=master,
        repetitions=results,
    )


def write_evaluation_csv(path, evaluations: dict, n: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["policy"] + [f"metric_{i}" for i in range(n)] + ["average"])
        for name, ev in evaluations.items():
            writer.writerow([name] + [repr(x) for x in ev.per_platform_metric] + [repr(ev.average_metric)])


def write_summary_csv(fh, report: ExperimentReport, n: int) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["policy"] + [f"mean_{i}" for i in range(n)] + [f"std_{i}" for i in range(n)]
                    + ["average_mean", "average_std"])
    for name, s in report.summary().items():
        writer.writerow([name] + [repr(x) for x in s["per_platform_mean"]] + [repr(x) for x in s["per_platform_std"]]
                        + [repr(s["average_mean"]), repr(s["average_std"])])


def write_report(report: ExperimentReport, outdir) -> None:
    """Write ``report.json`` plus flat CSVs for the first repetition and the summary."""
    os.makedirs(outdir, exist_ok=True)
    n = report.scenario["n_platforms"]
    first = report.repetitions[0]
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        fh.write(report.to_json())
    write_coefficients_csv(os.path.join(outdir, "coefficients.csv"), first.models)
    write_observations_csv(os.path.join(outdir, "observations.csv"), first.observations, n)
    for name, matrix in first.policies.items():
        write_policy_csv(os.path.join(outdir, f"policies_{name}.csv"), matrix)
    with open(os.path.join(outdir, "evaluation.csv"), "w") as fh:
        write_summary_csv(fh, report, n)
    with open(os.path.join(outdir, "transcript.txt"), "w") as fh:
        fh.write(first.negotiation.transcript.to_text())


@dataclass
class SweepPoint:
    value: float
    report: ExperimentReport

    def row(self) -> dict:
        rep = self.report
        n = rep.scenario["n_platforms"]
        fed = rep.summary()["fedgame"]
        matrix = rep.mean_policy("fedgame")
        conc = np.mean([concentration(r.policies["fedgame"]) for r in rep.repetitions], axis=0)
        row = {"value": self.value}
        row.update({f"metric_{i}": fed["per_platform_mean"][i] for i in range(n)})
        row["average"] = fed["average_mean"]
        row.update({f"outgoing_{i}": float(matrix[i].sum()) for i in range(n)})
        row.update({f"concentration_{i}": float(conc[i]) for i in range(n)})
        row["prediction_error"] = rep.prediction_error()[0]
        row["converged"] = rep.converged
        return row


def sweep(scenario, parameter: str, values, repetitions: int = 5, jobs: int = 1) -> list:
    """One full experiment per value with the same master seed, in input order."""
    if parameter not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; use one of {sorted(SWEEP_PARAMS)}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    config = scenario.config if hasattr(scenario, "config") else scenario
    points = []
    for v in values:
        # Validate every point before running any, so bad values fail fast.
        validate_scenario(with_overrides(config, **{SWEEP_PARAMS[parameter]: float(v)}))
    for v in values:
        point = with_overrides(config, **{SWEEP_PARAMS[parameter]: float(v)})
        try:
            points.append(SweepPoint(float(v), run_full_experiment(point, repetitions, jobs)))
        except FedGameError as exc:
            raise relabel(exc, f"{parameter}={v}") from exc
    return points


def write_sweep_csv(path, parameter: str, points: list) -> None:
    rows = [p.row() for p in points]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([parameter] + list(rows[0])[1:])
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])
