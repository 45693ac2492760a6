"""Average-platform metric of every policy over many random synthetic scenarios."""
import argparse

import numpy as np

from fedgame.config import ScenarioConfig, validate_scenario
from fedgame.core import GameHyperparams
from fedgame.oracle import SyntheticSpec
from fedgame.pipeline import POLICY_NAMES, run_full_experiment


def scenario(rng, seed, n=3, noise=0.005):
    w = rng.uniform(0.2, 2.0, size=(n, n))
    np.fill_diagonal(w, 0.0)
    spec = SyntheticSpec((0.5,) * n, w.tolist(), noise_sigma=noise)
    return validate_scenario(ScenarioConfig(n_platforms=n, budgets=(1.0,) * n, game=GameHyperparams(),
                                            oracle=spec, seed=seed))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", type=int, default=20)
    ap.add_argument("--platforms", type=int, default=3)
    ap.add_argument("--seed", type=int, default=6)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    averages = {name: [] for name in POLICY_NAMES}
    for k in range(args.scenarios):
        report = run_full_experiment(scenario(rng, k, args.platforms), repetitions=1)
        for name, s in report.summary().items():
            averages[name].append(s["average_mean"])
    for name in sorted(POLICY_NAMES, key=lambda n: -np.mean(averages[n])):
        print(f"{name:<8} {np.mean(averages[name]):.4f} +- {np.std(averages[name]):.4f}")


if __name__ == "__main__":
    main()
