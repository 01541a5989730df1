#!/usr/bin/env python3
"""Run every registered optimizer on the noisy quadratic and emit one CSV per
optimizer plus an aligned loss-curve file for plotting.

Usage: python scripts/compare_on_quadratic.py [--out runs/quadratic] [--steps 2000] [--seed 0]
"""
import argparse
import os

from adasecant.harness import (
    OPTIMIZERS,
    ExperimentConfig,
    RunAborted,
    emit_plot_data,
    run_experiment,
    write_csv,
)

# untuned defaults everywhere except a mild fixed rate for plain sgd
BASELINE_PARAMS = {
    "sgd": {"lr": 0.005, "momentum": 0.9},
    "adagrad": {"lr": 0.1},
    "rmsprop": {"lr": 0.01},
    "adadelta": {},
    "adasecant": {},
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/quadratic")
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    records = {}
    for name in sorted(OPTIMIZERS):
        config = ExperimentConfig(
            problem="quadratic",
            optimizer=name,
            steps=args.steps,
            batch_size=32,
            seed=args.seed,
            optimizer_params=BASELINE_PARAMS.get(name, {}),
        )
        try:
            record = run_experiment(config)
        except RunAborted as exc:
            print(f"{name:10s} diverged: {exc}")
            continue
        records[name] = record
        write_csv(record, os.path.join(args.out, f"{name}.csv"))
        print(f"{name:10s} final train_loss {record.final_loss:.6g}")
    emit_plot_data(records, os.path.join(args.out, "loss_curves.dat"))
    print(f"curves written to {args.out}/loss_curves.dat")


if __name__ == "__main__":
    main()
