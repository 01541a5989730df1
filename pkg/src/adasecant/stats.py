"""Exponential running statistics with an adaptive per-parameter memory length.

Every expectation the optimizer tracks (gradients, gradient changes, applied
steps, correction products) runs on the same primitive: exponential moving
averages of a sample stream and of its square, weighted by 1/tau, where the
time constant tau itself adapts to the stream. Streams whose mean dominates
their magnitude shorten tau (fresh data counts more); noisy zero-mean
streams lengthen it.

All operations are elementwise and accept scalars or same-shaped arrays, so
one state object can carry the statistics of a whole parameter vector.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

Floats = float | np.ndarray


class DegenerateStatisticsError(ValueError):
    """Negative second moment: no consistent sample stream produces this,
    so no time constant is defined."""


@dataclass(frozen=True)
class MovingAverageState:
    mean: Floats
    second_moment: Floats
    tau: Floats


def init_state(n: int | None = None, tau: float = 2.2) -> MovingAverageState:
    """Empty statistics (zero mean and second moment) for n parameters."""
    if n is None:
        return MovingAverageState(0.0, 0.0, float(tau))
    zeros = np.zeros(n)
    return MovingAverageState(zeros, zeros.copy(), np.full(n, float(tau)))


def from_first_sample(sample: Floats, tau: float = 2.2) -> MovingAverageState:
    """Statistics seeded so the first observation is the exact average."""
    sample = np.asarray(sample, dtype=np.float64)
    tau_arr = np.full_like(sample, float(tau)) if sample.ndim else float(tau)
    return MovingAverageState(sample + 0.0, np.square(sample), tau_arr)


def ema_update(state: MovingAverageState, sample: Floats) -> MovingAverageState:
    """Fold one sample into the running mean and second moment.

    mean'   = (1 - 1/tau) * mean   + (1/tau) * sample
    second' = (1 - 1/tau) * second + (1/tau) * sample^2

    tau is left untouched; adapt it separately with tau_update.
    """
    if not np.all(np.isfinite(sample)):
        raise ValueError("non-finite sample")
    w = 1.0 / state.tau
    mean = (1.0 - w) * state.mean + w * np.asarray(sample, dtype=np.float64)
    second = (1.0 - w) * state.second_moment + w * np.square(sample)
    return replace(state, mean=mean, second_moment=second)


def tau_update(state: MovingAverageState) -> Floats:
    """New time constant from the state's current (pre-update) moments.

    tau' = (1 - mean^2 / second_moment) * tau + 1

    Since mean^2 <= second_moment for any consistent stream, the multiplier
    sits in [0, 1] and tau' >= 1. An all-zero history (both moments zero)
    carries no signal, so memory lengthens by one step instead.
    """
    mean = np.asarray(state.mean, dtype=np.float64)
    second = np.asarray(state.second_moment, dtype=np.float64)
    if np.any(second < 0.0):
        raise DegenerateStatisticsError("negative second moment; no time constant defined")
    # A zero second moment with a denormal-scale nonzero mean is reachable by
    # underflow on a stream of shrinking samples; both cases carry no signal.
    zero_history = second == 0.0
    safe_second = np.where(zero_history, 1.0, second)
    ratio = np.square(mean) / safe_second
    # Rounding can push mean^2 a hair past the second moment on
    # near-constant streams; without the floor tau would dip below 1 and
    # flip the averaging weight negative.
    adapted = np.maximum(1.0, (1.0 - ratio) * state.tau + 1.0)
    grown = state.tau + 1.0
    out = np.where(zero_history, grown, adapted)
    return float(out) if out.ndim == 0 else out


def variance_estimate(state: MovingAverageState) -> Floats:
    """Centered variance, clamped at zero against rounding in the EMA mix."""
    return np.maximum(0.0, state.second_moment - np.square(state.mean))


def is_outlier(sample: Floats, state: MovingAverageState, n_sigma: float = 2.0) -> bool | np.ndarray:
    """True where the sample sits strictly more than n_sigma running standard
    deviations away from the running mean."""
    deviation = np.abs(np.asarray(sample, dtype=np.float64) - state.mean)
    out = deviation > n_sigma * np.sqrt(variance_estimate(state))
    return bool(out) if np.ndim(out) == 0 else out


def reset_tau(state: MovingAverageState, tau: float = 2.2) -> MovingAverageState:
    """Drop the memory length to ``tau`` (moments untouched), so the next
    sample and the accumulated past get comparable weight."""
    if np.ndim(state.tau) == 0:
        return replace(state, tau=float(tau))
    return replace(state, tau=np.full_like(np.asarray(state.tau, dtype=np.float64), float(tau)))
