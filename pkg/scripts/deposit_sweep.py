"""Sweep the deposit fraction on a noisy concave oracle: estimation error vs. budget spent."""
import argparse
import os

from fedgame.cli import parse_values
from fedgame.config import load_scenario
from fedgame.pipeline import sweep, write_sweep_csv

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=os.path.join(HERE, "..", "configs", "synthetic_concave_noisy.json"))
    ap.add_argument("--values", default="0.01,0.02,0.05,0.1")
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--out", default="results/sweep_deposit_fraction.csv")
    args = ap.parse_args()

    points = sweep(load_scenario(args.config), "deposit_fraction", parse_values(args.values), args.repetitions)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    write_sweep_csv(args.out, "deposit_fraction", points)
    for p in points:
        mean, std = p.report.prediction_error()
        print(f"deposit={p.value:<5} prediction error={mean:.4f} +- {std:.4f} "
              f"fedgame average={p.row()['average']:.4f}")


if __name__ == "__main__":
    main()
