"""Command-line entry points: run one experiment, sweep a hyperparameter
grid, or compare optimizers on one problem.

Exit codes: 0 success, 2 configuration error, 3 aborted run.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .harness import (
    OPTIMIZERS,
    PROBLEMS,
    ConfigError,
    ExperimentConfig,
    RunAborted,
    emit_plot_data,
    grid_search,
    parse_config_file,
    run_experiment,
    write_config_snapshot,
    write_csv,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adasecant",
        description="Run optimizer benchmarks and emit per-step CSV metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("--config", required=True, help="flat key-value config file")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--steps", type=int, default=None, help="override the step budget")
    run.add_argument("--out", default=None, help="output CSV path")

    grid = sub.add_parser("grid", help="sweep one configuration key over a value list")
    grid.add_argument("--config", required=True)
    grid.add_argument("--param", required=True, help="dotted key, e.g. optimizer.lr")
    grid.add_argument("--values", required=True, help="comma-separated values")
    grid.add_argument("--out", default=None, help="where to write the sweep table")

    compare = sub.add_parser("compare", help="run several optimizers on one problem")
    compare.add_argument("--optimizers", required=True, help="comma-separated optimizer names")
    compare.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    compare.add_argument("--out", required=True, help="output directory")
    compare.add_argument("--steps", type=int, default=2000)
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--batch-size", type=int, default=32)

    return parser


def _parse_value(raw: str):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    return raw


def _cmd_run(args) -> int:
    config = parse_config_file(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.steps is not None:
        config = replace(config, steps=args.steps)
    out = args.out or config.out or f"run_{config.problem}_{config.optimizer}_s{config.seed}.csv"
    record = run_experiment(config)
    write_csv(record, out)
    write_config_snapshot(record, out + ".meta")
    final = record.rows[-1][2] if record.rows else float("nan")
    print(f"wrote {out} ({len(record.rows)} steps, final train_loss {final:.6g})")
    return 0


def _cmd_grid(args) -> int:
    config = parse_config_file(args.config)
    values = [_parse_value(v) for v in args.values.split(",") if v != ""]
    result = grid_search(config, args.param, values)
    out = args.out or f"grid_{config.problem}_{config.optimizer}_{args.param.replace('.', '_')}.txt"
    with open(out, "w") as fh:
        fh.write(f"# grid over {args.param}\n")
        fh.write("value seed final_loss status\n")
        for cell in result.table:
            fh.write(f"{cell.value} {cell.seed} {cell.final_loss!r} {cell.status}\n")
    print(f"best {args.param} = {result.best_value} "
          f"(final train_loss {result.best_record.final_loss:.6g}); table in {out}")
    return 0


def _cmd_compare(args) -> int:
    names = [n.strip() for n in args.optimizers.split(",") if n.strip()]
    unknown = [n for n in names if n not in OPTIMIZERS]
    if unknown:
        raise ConfigError(f"unknown optimizers {unknown}; have {sorted(OPTIMIZERS)}")
    os.makedirs(args.out, exist_ok=True)
    records = {}
    for name in names:
        config = ExperimentConfig(
            problem=args.problem,
            optimizer=name,
            steps=args.steps,
            batch_size=args.batch_size,
            seed=args.seed,
        )
        record = run_experiment(config)
        records[name] = record
        path = os.path.join(args.out, f"{args.problem}_{name}.csv")
        write_csv(record, path)
        write_config_snapshot(record, path + ".meta")
        print(f"{name}: final train_loss {record.final_loss:.6g}")
    emit_plot_data(records, os.path.join(args.out, f"{args.problem}_compare.dat"))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "grid":
            return _cmd_grid(args)
        return _cmd_compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RunAborted, OSError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
