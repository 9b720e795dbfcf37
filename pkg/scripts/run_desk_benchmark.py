#!/usr/bin/env python3
"""Run the desk-scale strategy comparison and write per-strategy CSVs.

Sweeps the query strategies on an IDX dataset (see make_digits_idx.py)
with the standard geometry: 100 seed labels, batches of 100, budget 900,
three trials. Each strategy gets per-trial CSVs plus an aggregate with
mean and standard deviation per round.
"""

import argparse
import time
from pathlib import Path

from asklearn.engine import STRATEGIES, ExperimentConfig, run_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="data/digits", help="IDX dataset directory")
    parser.add_argument("--out", default="results/desk", help="output directory")
    parser.add_argument(
        "--strategies",
        default=",".join(STRATEGIES),
        help="comma-separated subset of: " + ", ".join(STRATEGIES),
    )
    parser.add_argument("--trials", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--noise", type=float, default=0.0, help="oracle noise ratio")
    args = parser.parse_args()

    data = Path(args.data)
    if not (data / "train-images-idx3-ubyte").exists():
        raise SystemExit(
            f"no IDX files under {data}; run scripts/make_digits_idx.py first"
        )

    for strategy in args.strategies.split(","):
        strategy = strategy.strip()
        config = ExperimentConfig(
            train_images=str(data / "train-images-idx3-ubyte"),
            train_labels=str(data / "train-labels-idx1-ubyte"),
            test_images=str(data / "test-images-idx3-ubyte"),
            test_labels=str(data / "test-labels-idx1-ubyte"),
            strategy=strategy,
            train_epochs=args.epochs,
            oracle_kind="noisy" if args.noise > 0 else "exact",
            noise_ratio=args.noise,
            trials=args.trials,
            seed=args.seed,
            out_dir=args.out,
        )
        started = time.perf_counter()
        trials = run_experiment(config)
        elapsed = time.perf_counter() - started
        finals = [t[-1] for t in trials]
        acc = sum(r.accuracy for r in finals) / len(finals)
        ece = sum(r.ece for r in finals) / len(finals)
        print(
            f"{strategy:>14}: final acc {acc:.4f}, ece {ece:.4f} "
            f"({len(trials)} trials, {elapsed:.0f}s)"
        )
    print(f"CSVs in {args.out}")


if __name__ == "__main__":
    main()
