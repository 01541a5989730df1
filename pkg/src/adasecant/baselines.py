"""Baseline first-order optimizers for comparison runs.

Standard textbook update rules, kept deliberately plain: SGD with momentum
(classical velocity form, optional linear learning-rate decay), Adagrad,
RMSprop, and Adadelta. Each step function takes and returns explicit state,
mirroring the main optimizer's calling convention.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import ParamVector


def _check_finite(theta: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(theta)):
        raise RuntimeError(f"{name} produced a non-finite parameter")


# --- SGD with momentum -------------------------------------------------------


@dataclass(frozen=True)
class SgdMomentumParams:
    lr: float = 0.1
    momentum: float = 0.0
    decay_steps: int | None = None  # lr decays linearly to 0 over this many steps

    def lr_at(self, step: int) -> float:
        if self.decay_steps is None:
            return self.lr
        return self.lr * max(0.0, 1.0 - step / self.decay_steps)


@dataclass(frozen=True)
class SgdMomentumState:
    velocity: np.ndarray
    step_count: int = 0


def init_sgd_momentum_state(n: int) -> SgdMomentumState:
    return SgdMomentumState(np.zeros(n))


def sgd_momentum_step(
    theta: ParamVector, grad: ParamVector, state: SgdMomentumState, params: SgdMomentumParams
) -> tuple[ParamVector, SgdMomentumState]:
    lr = params.lr_at(state.step_count)
    velocity = params.momentum * state.velocity - lr * grad
    theta_new = theta + velocity
    _check_finite(theta_new, "sgd_momentum")
    return theta_new, SgdMomentumState(velocity, state.step_count + 1)


# --- Adagrad -----------------------------------------------------------------


@dataclass(frozen=True)
class AdagradParams:
    lr: float = 0.1
    eps: float = 1e-8


@dataclass(frozen=True)
class AdagradState:
    accum: np.ndarray


def init_adagrad_state(n: int) -> AdagradState:
    return AdagradState(np.zeros(n))


def adagrad_step(
    theta: ParamVector, grad: ParamVector, state: AdagradState, params: AdagradParams
) -> tuple[ParamVector, AdagradState]:
    accum = state.accum + np.square(grad)
    theta_new = theta - params.lr * grad / (np.sqrt(accum) + params.eps)
    _check_finite(theta_new, "adagrad")
    return theta_new, AdagradState(accum)


# --- RMSprop -----------------------------------------------------------------


@dataclass(frozen=True)
class RmspropParams:
    lr: float = 0.01
    rho: float = 0.9
    eps: float = 1e-6


@dataclass(frozen=True)
class RmspropState:
    sq_avg: np.ndarray


def init_rmsprop_state(n: int) -> RmspropState:
    return RmspropState(np.zeros(n))


def rmsprop_step(
    theta: ParamVector, grad: ParamVector, state: RmspropState, params: RmspropParams
) -> tuple[ParamVector, RmspropState]:
    sq_avg = params.rho * state.sq_avg + (1.0 - params.rho) * np.square(grad)
    theta_new = theta - params.lr * grad / np.sqrt(sq_avg + params.eps)
    _check_finite(theta_new, "rmsprop")
    return theta_new, RmspropState(sq_avg)


# --- Adadelta ----------------------------------------------------------------


@dataclass(frozen=True)
class AdadeltaParams:
    lr: float = 1.0
    rho: float = 0.95
    eps: float = 1e-6


@dataclass(frozen=True)
class AdadeltaState:
    sq_avg: np.ndarray
    delta_avg: np.ndarray


def init_adadelta_state(n: int) -> AdadeltaState:
    return AdadeltaState(np.zeros(n), np.zeros(n))


def adadelta_step(
    theta: ParamVector, grad: ParamVector, state: AdadeltaState, params: AdadeltaParams
) -> tuple[ParamVector, AdadeltaState]:
    sq_avg = params.rho * state.sq_avg + (1.0 - params.rho) * np.square(grad)
    step = np.sqrt(state.delta_avg + params.eps) / np.sqrt(sq_avg + params.eps) * grad
    delta_avg = params.rho * state.delta_avg + (1.0 - params.rho) * np.square(step)
    theta_new = theta - params.lr * step
    _check_finite(theta_new, "adadelta")
    return theta_new, replace(state, sq_avg=sq_avg, delta_avg=delta_avg)
