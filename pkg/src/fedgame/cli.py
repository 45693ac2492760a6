"""Command-line interface.

Exit status: 0 success, 1 configuration error, 2 runtime failure,
3 visibility violations found by ``audit``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace


from .baselines import compute_shapley, greedy_policy, local_only_policy, shapley_policy, uniform_policy
from .config import CONFIG_KEYS, load_scenario, validate_scenario
from .core import FedGameError, InvalidConfig, ParseError, SchemaMismatch, derive_seed
from .estimation import read_coefficients_csv, run_estimation, write_coefficients_csv, write_observations_csv
from .negotiation import Transcript, init_policies, read_policy_csv, run_negotiation, visibility_audit, write_policy_csv
from .oracle import build_oracle
from .pipeline import (
    SWEEP_PARAMS,
    evaluate_policy,
    run_full_experiment,
    sweep,
    write_evaluation_csv,
    write_report,
    write_summary_csv,
    write_sweep_csv,
)

log = logging.getLogger("fedgame")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VIOLATION = 0, 1, 2, 3
BASELINES = ("local", "uniform", "greedy", "shapley")


def parse_values(text: str) -> list:
    """``"1,2,3"`` or an arithmetic range written ``"1.0,1.5,...,4.0"``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if "..." not in parts:
        return [float(p) for p in parts]
    i = parts.index("...")
    if i < 2 or i != len(parts) - 2:
        raise ValueError("range syntax is a,b,...,z")
    head = [float(p) for p in parts[:i]]
    stop = float(parts[-1])
    step = head[1] - head[0]
    if step <= 0:
        raise ValueError("range step must be positive")
    count = int(round((stop - head[0]) / step))
    values = [round(head[0] + k * step, 12) for k in range(count + 1)]
    if abs(values[-1] - stop) > 1e-9:
        raise ValueError(f"{stop} is not reachable from {head[0]} in steps of {step}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedgame",
        description="Estimate data values, negotiate data-quota policies and evaluate them.",
        epilog=CONFIG_KEYS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more progress output on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="scenario config (JSON)")
        if out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config's master seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
        return p

    common(sub.add_parser("estimate", help="run deposit experiments and fit regressions"))
    p = common(sub.add_parser("negotiate", help="negotiate FedGame policies"))
    p.add_argument("--models", help="coefficients.csv from `estimate` (otherwise estimated first)")
    p = common(sub.add_parser("baseline", help="compute baseline policies"))
    p.add_argument("--models", help="coefficients.csv from `estimate`")
    p.add_argument("--name", choices=BASELINES + ("all",), default="all")
    p = common(sub.add_parser("evaluate", help="evaluate policy matrices through the oracle"))
    p.add_argument("--policy", action="append", required=True, help="policies_<name>.csv (repeatable)")
    p.add_argument("--models", help="coefficients.csv, to also report rewards")
    p = common(sub.add_parser("run", help="full experiment with repetitions"))
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--summary-stdout", action="store_true", help="print the evaluation table as CSV")
    p = common(sub.add_parser("sweep", help="sweep gamma or the deposit fraction"))
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma list, or a,b,...,z")
    p.add_argument("--repetitions", type=int, default=5)
    p = sub.add_parser("audit", help="check a transcript for visibility violations")
    p.add_argument("--transcript", required=True)
    return parser


def _scenario(args):
    if not os.path.isfile(args.config):
        raise InvalidConfig("--config", f"cannot read config file {args.config}")
    config = load_scenario(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return validate_scenario(config)


def _models(args, scenario, oracle, seed):
    if getattr(args, "models", None):
        if not os.path.isfile(args.models):
            raise InvalidConfig("--models", f"cannot read {args.models}")
        models = read_coefficients_csv(args.models)
        if len(models) != scenario.n_platforms:
            raise InvalidConfig("--models", f"{len(models)} models for {scenario.n_platforms} platforms")
        return models
    return run_estimation(scenario, oracle, derive_seed(seed, "estimation"), args.jobs).models


def _single_run_seed(scenario) -> int:
    # Same stream as repetition 0 of `run`, so stage commands reproduce it.
    return derive_seed(scenario.seed, "repetition", 0)


def cmd_estimate(args) -> int:
    scenario = _scenario(args)
    seed = _single_run_seed(scenario)
    oracle = build_oracle(scenario.oracle, seed)
    result = run_estimation(scenario, oracle, derive_seed(seed, "estimation"), args.jobs)
    os.makedirs(args.out, exist_ok=True)
    write_coefficients_csv(os.path.join(args.out, "coefficients.csv"), result.models)
    write_observations_csv(os.path.join(args.out, "observations.csv"), result.observations, scenario.n_platforms)
    return EXIT_OK


def cmd_negotiate(args) -> int:
    scenario = _scenario(args)
    seed = _single_run_seed(scenario)
    oracle = None if args.models else build_oracle(scenario.oracle, seed)
    models = _models(args, scenario, oracle, seed)
    init = init_policies(scenario, scenario.config.init, derive_seed(seed, "init"))
    outcome = run_negotiation(scenario, models, init)
    audit = visibility_audit(outcome.transcript)
    os.makedirs(args.out, exist_ok=True)
    write_policy_csv(os.path.join(args.out, "policies_fedgame.csv"), outcome.final_policies)
    with open(os.path.join(args.out, "transcript.txt"), "w") as fh:
        fh.write(outcome.transcript.to_text())
    with open(os.path.join(args.out, "negotiation.json"), "w") as fh:
        json.dump({**outcome.summary(), "audit_violations": len(audit.violations)}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not outcome.converged:
        print(f"warning: negotiation did not converge in {outcome.rounds_used} rounds", file=sys.stderr)
    return EXIT_OK


def cmd_baseline(args) -> int:
    scenario = _scenario(args)
    seed = _single_run_seed(scenario)
    names = BASELINES if args.name == "all" else (args.name,)
    oracle = build_oracle(scenario.oracle, seed) if ("shapley" in names or not args.models) else None
    models = _models(args, scenario, oracle, seed) if "greedy" in names else None
    os.makedirs(args.out, exist_ok=True)
    for name in names:
        if name == "local":
            matrix = local_only_policy(scenario)
        elif name == "uniform":
            matrix = uniform_policy(scenario)
        elif name == "greedy":
            matrix = greedy_policy(scenario, models)
        else:
            sv = [compute_shapley(i, oracle, scenario.estimation.deposit_fraction, derive_seed(seed, "shapley"))
                  for i in range(scenario.n_platforms)]
            matrix = shapley_policy(scenario, sv)
        write_policy_csv(os.path.join(args.out, f"policies_{name}.csv"), matrix)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    scenario = _scenario(args)
    seed = _single_run_seed(scenario)
    oracle = build_oracle(scenario.oracle, seed)
    models = _models(args, scenario, oracle, seed) if args.models else None
    evaluations = {}
    for path in args.policy:
        if not os.path.isfile(path):
            raise InvalidConfig("--policy", f"cannot read {path}")
        name = os.path.splitext(os.path.basename(path))[0].removeprefix("policies_")
        matrix = read_policy_csv(path)
        if matrix.shape != (scenario.n_platforms, scenario.n_platforms):
            raise InvalidConfig("--policy", f"{path} has shape {matrix.shape}")
        evaluations[name] = evaluate_policy(scenario, oracle, matrix, derive_seed(seed, "evaluation"), name, models)
    os.makedirs(args.out, exist_ok=True)
    write_evaluation_csv(os.path.join(args.out, "evaluation.csv"), evaluations, scenario.n_platforms)
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = _scenario(args)
    if args.repetitions < 1:
        raise InvalidConfig("--repetitions", "must be >= 1")
    report = run_full_experiment(scenario, args.repetitions, args.jobs)
    write_report(report, args.out)
    if not report.converged:
        print("warning: negotiation did not converge in at least one repetition", file=sys.stderr)
    if args.summary_stdout:
        write_summary_csv(sys.stdout, report, scenario.n_platforms)
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _scenario(args)
    try:
        values = parse_values(args.values)
    except ValueError as exc:
        raise InvalidConfig("--values", str(exc)) from None
    points = sweep(scenario, args.param, values, args.repetitions, args.jobs)
    os.makedirs(args.out, exist_ok=True)
    write_sweep_csv(os.path.join(args.out, f"sweep_{args.param}.csv"), args.param, points)
    with open(os.path.join(args.out, f"sweep_{args.param}.json"), "w") as fh:
        json.dump([{"value": p.value, "report": p.report.to_dict()} for p in points], fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_audit(args) -> int:
    if not os.path.isfile(args.transcript):
        raise InvalidConfig("--transcript", f"cannot read {args.transcript}")
    with open(args.transcript) as fh:
        try:
            transcript = Transcript.from_text(fh.read())
        except ValueError as exc:
            raise InvalidConfig("--transcript", str(exc)) from None
    report = visibility_audit(transcript)
    for reader, sender, recipient in report.violations:
        print(f"violation: platform {reader} read c[{sender},{recipient}]", file=sys.stderr)
    print(f"{report.reads} reads, {len(report.violations)} violations", file=sys.stderr)
    return EXIT_VIOLATION if report.violations else EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "negotiate": cmd_negotiate,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InvalidConfig, SchemaMismatch, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FedGameError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
