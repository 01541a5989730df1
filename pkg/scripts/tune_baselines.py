#!/usr/bin/env python3
"""Reduced-scale baseline tuning on two-moons logistic regression: 15
log-spaced learning rates for rmsprop and adagrad, and 30 momentum/rate pairs
for sgd, compared against untuned adasecant.

Usage: python scripts/tune_baselines.py [--steps 2000] [--seed 0]
"""
import argparse
from dataclasses import replace

import numpy as np

from adasecant.harness import ExperimentConfig, RunAborted, grid_search, run_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    base = ExperimentConfig(
        problem="logistic_moons", optimizer="sgd",
        steps=args.steps, batch_size=32, seed=args.seed,
    )
    rates = list(np.logspace(-3, 1, 15))

    for name in ("rmsprop", "adagrad"):
        result = grid_search(replace(base, optimizer=name), "optimizer.lr", rates)
        print(f"{name:10s} best lr {result.best_value:.4g} "
              f"-> final train_loss {result.best_record.final_loss:.4f}")

    best_pair, best_loss = None, np.inf
    for momentum in (0.0, 0.5, 0.9):
        for lr in np.logspace(-3, 1, 10):
            config = replace(base, optimizer_params={"lr": float(lr), "momentum": momentum})
            try:
                record = run_experiment(config)
            except RunAborted:
                continue
            if record.final_loss < best_loss:
                best_pair, best_loss = (momentum, float(lr)), record.final_loss
    print(f"sgd        best momentum/lr {best_pair} -> final train_loss {best_loss:.4f}")

    ada = run_experiment(replace(base, optimizer="adasecant", optimizer_params={}))
    print(f"adasecant  untuned           -> final train_loss {ada.final_loss:.4f}")


if __name__ == "__main__":
    main()
