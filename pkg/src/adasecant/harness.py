"""Experiment runner: optimizer x problem x seed -> per-step metric records.

A run is fully determined by its configuration and seed: the seed drives
parameter initialization, minibatch sampling, and gradient noise through one
counter-based stream, so two runs with the same configuration emit
byte-identical CSVs apart from the wallclock column.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import baselines
from .numerics import BlockLayout, gaussian_fill, l2_norm, make_rng
from .optimizer import (
    AdasecantState,
    NonFiniteError,
    OptimizerConfig,
    adasecant_step,
    applied_rates,
    init_adasecant_state,
)
from .problems import (
    Problem,
    digits8x8_subset,
    logistic_problem,
    mlp_problem,
    quadratic_problem,
    rosenbrock_problem,
    two_moons_data,
)

CSV_HEADER = "step,epoch,train_loss,grad_norm,mean_applied_rate,wallclock_ms"
CSV_COLUMNS = CSV_HEADER.split(",")


class ConfigError(ValueError):
    """Configuration rejected before any computation ran."""


class RunAborted(RuntimeError):
    """A run hit a non-finite loss or parameter; carries the last good step."""

    def __init__(self, message: str, step: int, last_good_step: int):
        super().__init__(f"{message} (step {step}, last good step {last_good_step})")
        self.step = step
        self.last_good_step = last_good_step


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    optimizer: str
    steps: int = 2000
    batch_size: int = 32
    seed: int = 0
    init_std: float = 0.05
    out: str | None = None
    problem_params: dict = field(default_factory=dict)
    optimizer_params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunRecord:
    config: dict          # flat resolved snapshot, enough to reproduce the run
    seed: int
    rows: list[tuple]     # (step, epoch, train_loss, grad_norm, mean_applied_rate, wallclock_ms)

    def column(self, name: str) -> np.ndarray:
        idx = CSV_COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows], dtype=np.float64)

    @property
    def final_loss(self) -> float:
        if not self.rows:
            raise ValueError("empty run has no final loss")
        return float(self.rows[-1][2])


# --- Problem registry ----------------------------------------------------------


def _build_quadratic(params: dict) -> Problem:
    dim = int(params.get("dim", 10))
    h_min = float(params.get("h_min", 1.0))
    h_max = float(params.get("h_max", 100.0))
    noise_std = float(params.get("noise_std", 0.1))
    h_diag = np.logspace(np.log10(h_min), np.log10(h_max), dim)
    return quadratic_problem(h_diag, noise_std)


def _build_rosenbrock(params: dict) -> Problem:
    return rosenbrock_problem(int(params.get("dim", 2)))


def _build_logistic_moons(params: dict) -> Problem:
    data = two_moons_data(
        int(params.get("data_seed", 0)),
        int(params.get("n", 200)),
        float(params.get("noise", 0.1)),
    )
    return logistic_problem(data)


def _build_mlp_moons(params: dict) -> Problem:
    data = two_moons_data(
        int(params.get("data_seed", 0)),
        int(params.get("n", 200)),
        float(params.get("noise", 0.1)),
    )
    hidden = int(params.get("hidden", 8))
    return mlp_problem([2, hidden, 2], str(params.get("activation", "tanh")), data)


def _build_mlp_digits(params: dict) -> Problem:
    data = digits8x8_subset(int(params.get("data_seed", 0)), int(params.get("n_per_class", 15)))
    hidden = int(params.get("hidden", 16))
    return mlp_problem([64, hidden, 10], str(params.get("activation", "tanh")), data)


PROBLEMS: dict[str, Callable[[dict], Problem]] = {
    "quadratic": _build_quadratic,
    "rosenbrock": _build_rosenbrock,
    "logistic_moons": _build_logistic_moons,
    "mlp_moons": _build_mlp_moons,
    "mlp_digits": _build_mlp_digits,
}

_PROBLEM_DEFAULTS: dict[str, dict] = {
    "quadratic": {"dim": 10, "h_min": 1.0, "h_max": 100.0, "noise_std": 0.1},
    "rosenbrock": {"dim": 2},
    "logistic_moons": {"data_seed": 0, "n": 200, "noise": 0.1},
    "mlp_moons": {"data_seed": 0, "n": 200, "noise": 0.1, "hidden": 8, "activation": "tanh"},
    "mlp_digits": {"data_seed": 0, "n_per_class": 15, "hidden": 16, "activation": "tanh"},
}


# --- Optimizer registry ---------------------------------------------------------


class _AdasecantRunner:
    def __init__(self, layout: BlockLayout, params: dict):
        self.config = OptimizerConfig(**params)
        self.state: AdasecantState = init_adasecant_state(layout, self.config)

    def step(self, theta, grad):
        theta, self.state = adasecant_step(theta, grad, self.state, self.config)
        return theta

    def mean_applied_rate(self) -> float:
        return float(np.mean(applied_rates(self.state)))

    def resolved_params(self) -> dict:
        return {k: getattr(self.config, k) for k in OptimizerConfig.__dataclass_fields__}


class _BaselineRunner:
    def __init__(self, params_cls, init_state, step_fn, rate_fn, layout: BlockLayout, params: dict):
        self.params = params_cls(**params)
        self.state = init_state(layout.n)
        self._step_fn = step_fn
        self._rate_fn = rate_fn

    def step(self, theta, grad):
        theta, self.state = self._step_fn(theta, grad, self.state, self.params)
        return theta

    def mean_applied_rate(self) -> float:
        return float(self._rate_fn(self.params, self.state))

    def resolved_params(self) -> dict:
        return {k: getattr(self.params, k) for k in type(self.params).__dataclass_fields__}


def _sgd_rate(p: baselines.SgdMomentumParams, s: baselines.SgdMomentumState) -> float:
    return p.lr_at(max(0, s.step_count - 1))


def _adagrad_rate(p: baselines.AdagradParams, s: baselines.AdagradState) -> float:
    return float(np.mean(p.lr / (np.sqrt(s.accum) + p.eps)))


def _rmsprop_rate(p: baselines.RmspropParams, s: baselines.RmspropState) -> float:
    return float(np.mean(p.lr / np.sqrt(s.sq_avg + p.eps)))


def _adadelta_rate(p: baselines.AdadeltaParams, s: baselines.AdadeltaState) -> float:
    return float(np.mean(p.lr * np.sqrt(s.delta_avg + p.eps) / np.sqrt(s.sq_avg + p.eps)))


OPTIMIZERS: dict[str, Callable[[BlockLayout, dict], object]] = {
    "adasecant": _AdasecantRunner,
    "sgd": lambda layout, p: _BaselineRunner(
        baselines.SgdMomentumParams, baselines.init_sgd_momentum_state,
        baselines.sgd_momentum_step, _sgd_rate, layout, p),
    "adagrad": lambda layout, p: _BaselineRunner(
        baselines.AdagradParams, baselines.init_adagrad_state,
        baselines.adagrad_step, _adagrad_rate, layout, p),
    "rmsprop": lambda layout, p: _BaselineRunner(
        baselines.RmspropParams, baselines.init_rmsprop_state,
        baselines.rmsprop_step, _rmsprop_rate, layout, p),
    "adadelta": lambda layout, p: _BaselineRunner(
        baselines.AdadeltaParams, baselines.init_adadelta_state,
        baselines.adadelta_step, _adadelta_rate, layout, p),
}


def validate_config(config: ExperimentConfig) -> None:
    if config.problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {config.problem!r}; have {sorted(PROBLEMS)}")
    if config.optimizer not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {config.optimizer!r}; have {sorted(OPTIMIZERS)}")
    if config.steps < 0:
        raise ConfigError(f"steps must be >= 0, got {config.steps}")
    if config.batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {config.batch_size}")
    if config.seed < 0:
        raise ConfigError(f"seed must be >= 0, got {config.seed}")
    if config.init_std < 0:
        raise ConfigError(f"init_std must be >= 0, got {config.init_std}")


def build_problem(config: ExperimentConfig) -> Problem:
    validate_config(config)
    known = _PROBLEM_DEFAULTS[config.problem]
    unknown = set(config.problem_params) - set(known)
    if unknown:
        raise ConfigError(f"unknown problem parameters {sorted(unknown)} for {config.problem!r}")
    return PROBLEMS[config.problem](config.problem_params)


def build_optimizer(config: ExperimentConfig, layout: BlockLayout):
    validate_config(config)
    try:
        return OPTIMIZERS[config.optimizer](layout, config.optimizer_params)
    except TypeError as exc:
        raise ConfigError(f"bad optimizer parameters for {config.optimizer!r}: {exc}") from exc


def config_snapshot(config: ExperimentConfig, runner=None) -> dict:
    snapshot: dict = {
        "problem": config.problem,
        "optimizer": config.optimizer,
        "steps": config.steps,
        "batch_size": config.batch_size,
        "seed": config.seed,
        "init_std": config.init_std,
    }
    resolved_problem = dict(_PROBLEM_DEFAULTS[config.problem])
    resolved_problem.update(config.problem_params)
    for key, value in sorted(resolved_problem.items()):
        snapshot[f"problem.{key}"] = value
    optimizer_params = runner.resolved_params() if runner is not None else config.optimizer_params
    for key, value in sorted(optimizer_params.items()):
        snapshot[f"optimizer.{key}"] = value
    return snapshot


def run_experiment(config: ExperimentConfig) -> RunRecord:
    """Train for a fixed step budget, recording full-batch metrics per step."""
    validate_config(config)
    problem = build_problem(config)
    runner = build_optimizer(config, problem.layout)
    rng = make_rng(config.seed)
    theta = gaussian_fill(rng, problem.dim, 0.0, config.init_std)

    n_examples = len(problem.dataset) if problem.dataset is not None else None
    rows: list[tuple] = []
    for step in range(config.steps):
        started = time.perf_counter()
        _, grad = problem.minibatch_loss_and_grad(theta, rng, config.batch_size)
        try:
            theta = runner.step(theta, grad)
        except (NonFiniteError, RuntimeError) as exc:
            raise RunAborted(str(exc), step, step - 1) from exc
        wallclock_ms = (time.perf_counter() - started) * 1000.0

        train_loss, full_grad = problem.loss_and_grad(theta)
        if not np.isfinite(train_loss):
            raise RunAborted("non-finite training loss", step, step - 1)
        if n_examples is not None:
            epoch = (step + 1) * config.batch_size / n_examples
        else:
            epoch = float(step + 1)
        rows.append(
            (step, epoch, train_loss, l2_norm(full_grad), runner.mean_applied_rate(), wallclock_ms)
        )

    return RunRecord(config_snapshot(config, runner), config.seed, rows)


# --- Grid search -----------------------------------------------------------------


@dataclass(frozen=True)
class GridCell:
    value: object
    seed: int
    final_loss: float   # inf for failed cells
    status: str         # "ok" or "failed: <reason>"


@dataclass(frozen=True)
class GridResult:
    param: str
    best_value: object
    best_record: RunRecord
    table: list[GridCell]


def apply_override(config: ExperimentConfig, key: str, value) -> ExperimentConfig:
    """Dotted-key override, same addressing as the config file format."""
    if key.startswith("problem."):
        params = dict(config.problem_params)
        params[key.split(".", 1)[1]] = value
        return replace(config, problem_params=params)
    if key.startswith("optimizer."):
        params = dict(config.optimizer_params)
        params[key.split(".", 1)[1]] = value
        return replace(config, optimizer_params=params)
    if key in ("problem", "optimizer", "out"):
        return replace(config, **{key: str(value)})
    if key in ("steps", "batch_size", "seed"):
        return replace(config, **{key: int(value)})
    if key == "init_std":
        return replace(config, init_std=float(value))
    raise ConfigError(f"unknown configuration key {key!r}")


def grid_search(
    base_config: ExperimentConfig,
    param: str,
    values: list,
    seeds: list[int] | None = None,
) -> GridResult:
    """Run every cell with the same seed set; pick the value whose mean final
    loss is lowest. Failed cells stay in the table and never win."""
    if not values:
        raise ConfigError("empty grid")
    seeds = list(seeds) if seeds else [base_config.seed]

    table: list[GridCell] = []
    best_value = None
    best_score = np.inf
    best_record: RunRecord | None = None
    for value in values:
        cell_config = apply_override(base_config, param, value)
        losses = []
        first_record = None
        for seed in seeds:
            try:
                record = run_experiment(replace(cell_config, seed=seed))
            except (RunAborted, ConfigError) as exc:
                table.append(GridCell(value, seed, float("inf"), f"failed: {exc}"))
                losses.append(np.inf)
                continue
            if first_record is None:
                first_record = record
            table.append(GridCell(value, seed, record.final_loss, "ok"))
            losses.append(record.final_loss)
        score = float(np.mean(losses))
        if score < best_score and first_record is not None:
            best_score = score
            best_value = value
            best_record = first_record
    if best_record is None:
        raise RunAborted("every grid cell failed", 0, -1)
    return GridResult(param, best_value, best_record, table)


# --- Serialization ----------------------------------------------------------------


def write_csv(record: RunRecord, path: str) -> None:
    """Metrics CSV with the exact documented header; floats are written with
    repr so parsing them back recovers identical values."""
    try:
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for step, epoch, loss, grad_norm, rate, wallclock in record.rows:
                fh.write(f"{step},{epoch!r},{loss!r},{grad_norm!r},{rate!r},{wallclock!r}\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path: str) -> list[tuple]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}: {header!r}")
        rows = []
        for line in fh:
            step, epoch, loss, grad_norm, rate, wallclock = line.strip().split(",")
            rows.append((int(step), float(epoch), float(loss), float(grad_norm),
                         float(rate), float(wallclock)))
    return rows


def write_config_snapshot(record: RunRecord, path: str) -> None:
    """The run's resolved configuration in the flat key-value format the
    config-file parser reads back."""
    with open(path, "w") as fh:
        fh.write("# resolved run configuration\n")
        for key, value in record.config.items():
            fh.write(f"{key} = {value}\n")


def emit_plot_data(records: dict[str, RunRecord], path: str) -> None:
    """Whitespace-separated training-loss series, one aligned column per
    optimizer, for external plotting tools."""
    if not records:
        raise ValueError("no records to emit")
    names = list(records)
    lengths = {len(records[name].rows) for name in names}
    if len(lengths) != 1:
        raise ValueError(f"records have differing lengths {sorted(lengths)}; cannot align")
    (n_rows,) = lengths
    with open(path, "w") as fh:
        fh.write("# step " + " ".join(names) + "\n")
        for i in range(n_rows):
            losses = " ".join(repr(float(records[name].rows[i][2])) for name in names)
            fh.write(f"{records[names[0]].rows[i][0]} {losses}\n")


# --- Flat key-value config files -----------------------------------------------


def _parse_value(raw: str):
    text = raw.strip()
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_file(path: str) -> ExperimentConfig:
    """Flat ``key = value`` lines; '#' starts a comment. Keys: problem,
    optimizer, steps, batch_size, seed, init_std, out, and dotted
    problem.<name> / optimizer.<name> parameters."""
    entries: dict[str, object] = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
                key, raw = text.split("=", 1)
                entries[key.strip()] = _parse_value(raw)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    if "problem" not in entries or "optimizer" not in entries:
        raise ConfigError(f"{path}: config must set both 'problem' and 'optimizer'")
    config = ExperimentConfig(problem=str(entries.pop("problem")), optimizer=str(entries.pop("optimizer")))
    for key, value in entries.items():
        config = apply_override(config, key, value)
    validate_config(config)
    return config
