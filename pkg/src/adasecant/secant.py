"""Per-parameter step sizes from directional finite differences.

Given a descent direction d, an applied update delta, and the gradient
change alpha it caused, delta / alpha is a curvature-normalized rate per
parameter: on a quadratic with Hessian H it equals d_i / (H d)_i without
forming or inverting H. The direction comes from normalizing each named
block of the gradient to unit length, which makes it invariant to the
gradient's overall scale.

In the stochastic case the rate is estimated from running moments of delta
and alpha instead of a single quotient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import BlockLayout, ParamVector, l2_norm
from .stats import Floats, MovingAverageState, init_state


class VanishingCurvatureError(ValueError):
    """Gradient change too small to divide by; no secant rate is defined."""


@dataclass(frozen=True)
class SecantStats:
    """Running moments of applied updates and the gradient changes they cause.

    delta and alpha carry means and second moments of the two streams; cross
    carries the mean of their elementwise product. All three advance once per
    optimizer step after the first.
    """

    delta: MovingAverageState
    alpha: MovingAverageState
    cross: MovingAverageState


def init_secant_stats(n: int | None = None, tau: float = 2.2) -> SecantStats:
    return SecantStats(init_state(n, tau), init_state(n, tau), init_state(n, tau))


def block_normalize(g: ParamVector, layout: BlockLayout) -> ParamVector:
    """Each block of g divided by its own L2 norm; zero blocks stay zero."""
    d = np.array(g, dtype=np.float64)
    for block in layout.blocks:
        sl = slice(block.offset, block.offset + block.length)
        norm = l2_norm(d[sl])
        if norm > 0.0:
            d[sl] /= norm
    return d


def secant_rate_deterministic(delta: Floats, alpha: Floats, eps: float = 1e-7) -> Floats:
    """delta / alpha, the curvature-normalized rate along the last update."""
    if np.any(np.abs(alpha) <= eps):
        raise VanishingCurvatureError(
            f"gradient change within {eps} of zero; fall back to a bootstrap rate"
        )
    return np.asarray(delta, dtype=np.float64) / alpha


def directional_newton_step(grad: ParamVector, hess_dir_prod: ParamVector, direction: ParamVector) -> ParamVector:
    """Update delta_i = -d_i * g_i / (H d)_i for a known Hessian-direction
    product; used by the deterministic verification paths, not the
    stochastic optimizer."""
    hess_dir_prod = np.asarray(hess_dir_prod, dtype=np.float64)
    if np.any(hess_dir_prod == 0.0):
        raise ZeroDivisionError("Hessian-direction product has a zero component")
    return -np.asarray(direction, dtype=np.float64) * grad / hess_dir_prod


def alpha_update(g_curr: ParamVector, g_prev: ParamVector) -> ParamVector:
    """Elementwise gradient change g_curr - g_prev."""
    g_curr = np.asarray(g_curr, dtype=np.float64)
    g_prev = np.asarray(g_prev, dtype=np.float64)
    if g_curr.shape != g_prev.shape:
        raise ValueError(f"gradient shapes differ: {g_curr.shape} vs {g_prev.shape}")
    return g_curr - g_prev


def expected_rate(stats: SecantStats, eta_min: float = 1e-8, eps: float = 1e-7) -> Floats:
    """Stochastic secant rate sqrt(E[delta^2])/sqrt(E[alpha^2]) - E[alpha*delta]/E[alpha^2].

    The raw expression can go negative (perfectly correlated same-sign
    streams drive it to zero and rounding below), so the result is floored
    at eta_min; eps guards both denominators.
    """
    e_d2 = stats.delta.second_moment
    e_a2 = stats.alpha.second_moment
    rate = np.sqrt(e_d2) / (np.sqrt(e_a2) + eps) - stats.cross.mean / (e_a2 + eps)
    return np.maximum(rate, eta_min)


def expected_rate_cov(stats: SecantStats, eta_min: float = 1e-8, eps: float = 1e-7) -> Floats:
    """Variant subtracting cov(alpha, delta)/E[alpha^2] instead of the raw
    product moment; coincides with expected_rate when either stream has zero
    mean. Kept for comparison runs."""
    e_d2 = stats.delta.second_moment
    e_a2 = stats.alpha.second_moment
    cov = stats.cross.mean - stats.alpha.mean * stats.delta.mean
    rate = np.sqrt(e_d2) / (np.sqrt(e_a2) + eps) - cov / (e_a2 + eps)
    return np.maximum(rate, eta_min)
