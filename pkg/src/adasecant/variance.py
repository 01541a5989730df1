"""Gradient variance reduction by blending fresh gradients with their running mean.

The corrected gradient (g + gamma * mean_g) / (1 + gamma) has the same
expectation as g but 1/(1+gamma)^2 of its variance. Writing beta = 1/(1+gamma)
turns it into the convex combination beta*g + (1-beta)*mean_g, whose
mean-squared-error-optimal beta has a closed form in the gradient moments.

Online, gamma is estimated per parameter from products of deviations between
consecutive gradients. Taking root-mean-square statistics of the numerator
and denominator streams separately keeps the estimate nonnegative; a cap
bounds how much averaging can be traded for bias.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stats import Floats, MovingAverageState, ema_update, init_state


@dataclass(frozen=True)
class GammaStats:
    """Running statistics of the blend-estimate product streams.

    num tracks (g - g_prev) * (g - mean_g), den tracks
    (g - mean_g) * (g_prev - mean_g); each stream's second moment feeds the
    RMS ratio in gamma_estimate.
    """

    num: MovingAverageState
    den: MovingAverageState
    gamma_cap: float = 1.8


def init_gamma_stats(n: int | None = None, gamma_cap: float = 1.8, tau: float = 2.2) -> GammaStats:
    if gamma_cap <= 0:
        raise ValueError(f"gamma_cap must be positive, got {gamma_cap}")
    return GammaStats(init_state(n, tau), init_state(n, tau), float(gamma_cap))


def corrected_gradient(g: Floats, mean_g: Floats, gamma: Floats) -> Floats:
    """(g + gamma * mean_g) / (1 + gamma); a convex combination of g and
    mean_g, so the output always lies between them."""
    return (g + gamma * mean_g) / (1.0 + gamma)


def optimal_beta(g: np.ndarray, g_next: np.ndarray, mean: float) -> float:
    """Blend weight minimizing E[(beta*g + (1-beta)*mean - g_next)^2].

    Closed form: E[(g - mean)(g_next - mean)] / E[(g - mean)^2], evaluated
    on the paired samples with the known mean. Raises if g carries no
    variance (a deterministic gradient needs no blending; use beta = 1).
    """
    g = np.asarray(g, dtype=np.float64)
    g_next = np.asarray(g_next, dtype=np.float64)
    if g.shape != g_next.shape:
        raise ValueError(f"paired samples must match, got {g.shape} vs {g_next.shape}")
    centered = g - mean
    denom = float(np.mean(np.square(centered)))
    if denom <= 0.0:
        raise ValueError("zero-variance gradient samples; blending is unnecessary")
    return float(np.mean(centered * (g_next - mean)) / denom)


def gamma_product_samples(g: Floats, g_prev: Floats, mean_g: Floats) -> tuple[Floats, Floats]:
    """The two deviation products one gradient pair contributes:
    (g - g_prev)(g - mean_g) for the numerator stream and
    (g - mean_g)(g_prev - mean_g) for the denominator stream."""
    return (g - g_prev) * (g - mean_g), (g - mean_g) * (g_prev - mean_g)


def update_gamma_stats(stats: GammaStats, g: Floats, g_prev: Floats, mean_g: Floats) -> GammaStats:
    """Push one consecutive-gradient pair into the product streams, at each
    stream's own time-constant weight."""
    num_sample, den_sample = gamma_product_samples(g, g_prev, mean_g)
    return GammaStats(
        ema_update(stats.num, num_sample),
        ema_update(stats.den, den_sample),
        stats.gamma_cap,
    )


def gamma_estimate(stats: GammaStats, eps: float = 1e-7) -> Floats:
    """RMS(num stream) / RMS(den stream), clipped to [0, gamma_cap].

    The second moments are EMAs of the squared products, so the ratio is
    nonnegative by construction; eps guards the empty/zero denominator.
    """
    gamma = np.sqrt(stats.num.second_moment) / np.sqrt(stats.den.second_moment + eps)
    return np.clip(gamma, 0.0, stats.gamma_cap)
