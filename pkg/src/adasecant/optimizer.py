"""Adasecant: adaptive per-parameter secant step sizes with variance reduction.

One step, in order:

1. block-normalize the incoming gradient into a unit-per-block direction d
2. per parameter: estimate the blend coefficient gamma from the running
   product statistics (excluding this step's sample) and form the corrected
   gradient g_tilde = (d + gamma * mean_d) / (1 + gamma)
3. outlier test on the raw gradient and on the gradient change alpha against
   their pre-update statistics; flagged parameters get their memory length
   reset to tau_reset for this step's averaging and keep it through the step
4. fold this step's samples into every moving average (gradient, direction,
   blend products, alpha, the previously applied update, alpha*delta)
5. estimate the per-parameter rate eta from the delta/alpha moments
6. adapt every time constant from its pre-update moments (skipped where the
   outlier reset already pinned it)
7. thresholded-Adagrad guard: rho = max(1, sqrt(accumulated g_tilde^2)), so
   the applied rate eta/rho never exceeds eta
8. theta' = theta - (eta / rho) * g_tilde

The first step has no curvature information yet; it applies a small
bootstrap rate along d and seeds the gradient statistics from the first
observations. Delta/alpha statistics start one step later, when the first
gradient change is available, and the bootstrap rate stays in force for
bootstrap_steps steps while those statistics fill.

All per-parameter state lives in flat arrays aligned with the parameter
vector, so a step is a fixed number of vectorized array operations.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import BlockLayout, ParamVector
from .secant import (
    SecantStats,
    alpha_update,
    block_normalize,
    expected_rate,
    expected_rate_cov,
    init_secant_stats,
)
from .stats import MovingAverageState, ema_update, from_first_sample, init_state, is_outlier, tau_update
from .variance import (
    GammaStats,
    corrected_gradient,
    gamma_estimate,
    gamma_product_samples,
    init_gamma_stats,
)


class NonFiniteError(RuntimeError):
    """A step produced a NaN/Inf; carries the stage and parameter index."""

    def __init__(self, stage: str, index: int):
        super().__init__(f"non-finite value at stage {stage!r}, parameter index {index}")
        self.stage = stage
        self.index = index


@dataclass(frozen=True)
class OptimizerConfig:
    gamma_cap: float = 1.8
    tau_reset: float = 2.2
    outlier_sigma: float = 2.0
    eps: float = 1e-7
    eta_min: float = 1e-8
    bootstrap_rate: float = 1e-3
    # Steps that apply bootstrap_rate while the statistics fill. A rate
    # estimated from a single (delta, alpha) pair is a raw noisy quotient;
    # one unluckily small alpha would catapult the parameters.
    bootstrap_steps: int = 5
    use_cov_form: bool = False
    enable_adagrad_guard: bool = True
    enable_variance_reduction: bool = True

    def __post_init__(self) -> None:
        for field in ("gamma_cap", "tau_reset", "outlier_sigma", "eps", "eta_min", "bootstrap_rate"):
            value = getattr(self, field)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{field} must be positive and finite, got {value}")
        if self.bootstrap_steps < 1:
            raise ValueError(f"bootstrap_steps must be >= 1, got {self.bootstrap_steps}")


@dataclass(frozen=True)
class AdasecantState:
    """All per-parameter accumulators, aligned index-for-index with theta."""

    layout: BlockLayout
    grad_stats: MovingAverageState          # raw gradient, feeds the outlier test
    dir_stats: MovingAverageState           # block-normalized gradient, feeds the blend
    gamma_stats: GammaStats
    secant_stats: SecantStats
    adagrad_accum: np.ndarray               # running sum of g_tilde^2, never decreases
    prev_grad: ParamVector | None           # raw gradient of the previous step
    prev_dir: ParamVector | None            # normalized gradient of the previous step
    prev_delta: ParamVector | None          # previous rate-sized step -eta * g_tilde
    step_count: int
    # Diagnostics from the most recent step, for the harness and tests.
    last_direction: ParamVector | None = None
    last_gamma: np.ndarray | None = None
    last_g_tilde: ParamVector | None = None
    last_alpha: ParamVector | None = None
    last_eta: np.ndarray | None = None
    last_rho: np.ndarray | None = None
    last_applied_rate: np.ndarray | None = None


def init_adasecant_state(layout: BlockLayout, config: OptimizerConfig | None = None) -> AdasecantState:
    config = config or OptimizerConfig()
    n = layout.n
    tau = config.tau_reset
    return AdasecantState(
        layout=layout,
        grad_stats=init_state(n, tau),
        dir_stats=init_state(n, tau),
        gamma_stats=init_gamma_stats(n, config.gamma_cap, tau),
        secant_stats=init_secant_stats(n, tau),
        adagrad_accum=np.zeros(n),
        prev_grad=None,
        prev_dir=None,
        prev_delta=None,
        step_count=0,
    )


def adagrad_guard(accum: np.ndarray, g_tilde: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate g_tilde^2 and return the rate divisor rho = max(1, sqrt(sum)).

    The floor at 1 means the guard only ever shrinks the applied rate; an
    unguarded accumulator below 1 would amplify it instead.
    """
    accum = accum + np.square(g_tilde)
    return accum, np.maximum(1.0, np.sqrt(accum))


def _advance(
    state: MovingAverageState,
    sample: np.ndarray,
    reset_mask: np.ndarray,
    tau_reset: float,
) -> MovingAverageState:
    """Outlier-aware statistics advance for one stream.

    Flagged parameters average this sample at the reset weight and keep the
    reset time constant; everyone else pushes at the current weight and then
    adapts tau from the pre-push moments.
    """
    tau_for_push = np.where(reset_mask, tau_reset, state.tau)
    pushed = ema_update(replace(state, tau=tau_for_push), sample)
    new_tau = np.where(reset_mask, tau_reset, tau_update(state))
    return replace(pushed, tau=new_tau)


def adasecant_step(
    theta: ParamVector,
    grad: ParamVector,
    state: AdasecantState,
    config: OptimizerConfig | None = None,
) -> tuple[ParamVector, AdasecantState]:
    config = config or OptimizerConfig()
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape or theta.shape != (state.layout.n,):
        raise ValueError(
            f"shape mismatch: theta {theta.shape}, grad {grad.shape}, layout n={state.layout.n}"
        )
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("incoming gradient", int(np.flatnonzero(~np.isfinite(grad))[0]))

    direction = block_normalize(grad, state.layout)

    if state.step_count == 0:
        return _bootstrap_step(theta, grad, direction, state, config)

    n = state.layout.n
    alpha = alpha_update(grad, state.prev_grad)
    delta_prev = state.prev_delta
    mean_dir = np.asarray(state.dir_stats.mean, dtype=np.float64)

    if config.enable_variance_reduction:
        gamma = np.asarray(gamma_estimate(state.gamma_stats, config.eps), dtype=np.float64)
    else:
        gamma = np.zeros(n)
    g_tilde = corrected_gradient(direction, mean_dir, gamma)
    _check_finite(g_tilde, "variance-corrected gradient")

    outlier = np.asarray(
        is_outlier(grad, state.grad_stats, config.outlier_sigma)
        | is_outlier(alpha, state.secant_stats.alpha, config.outlier_sigma)
    )

    grad_stats = _advance(state.grad_stats, grad, outlier, config.tau_reset)
    dir_stats = _advance(state.dir_stats, direction, outlier, config.tau_reset)

    num_sample, den_sample = gamma_product_samples(direction, state.prev_dir, mean_dir)
    if state.step_count == 1:
        # First gradient change: seed the delta/alpha/blend streams outright.
        gamma_stats = GammaStats(
            from_first_sample(num_sample, config.tau_reset),
            from_first_sample(den_sample, config.tau_reset),
            state.gamma_stats.gamma_cap,
        )
        secant_stats = SecantStats(
            from_first_sample(delta_prev, config.tau_reset),
            from_first_sample(alpha, config.tau_reset),
            from_first_sample(alpha * delta_prev, config.tau_reset),
        )
    else:
        gamma_stats = GammaStats(
            _advance(state.gamma_stats.num, num_sample, outlier, config.tau_reset),
            _advance(state.gamma_stats.den, den_sample, outlier, config.tau_reset),
            state.gamma_stats.gamma_cap,
        )
        secant_stats = SecantStats(
            _advance(state.secant_stats.delta, delta_prev, outlier, config.tau_reset),
            _advance(state.secant_stats.alpha, alpha, outlier, config.tau_reset),
            _advance(state.secant_stats.cross, alpha * delta_prev, outlier, config.tau_reset),
        )

    rate_fn = expected_rate_cov if config.use_cov_form else expected_rate
    eta = np.asarray(rate_fn(secant_stats, config.eta_min, config.eps), dtype=np.float64)
    _check_finite(eta, "step rate")

    accum, rho = adagrad_guard(state.adagrad_accum, g_tilde)
    if not config.enable_adagrad_guard:
        rho = np.ones(n)

    if state.step_count < config.bootstrap_steps:
        # Alpha statistics are still degenerate (too few gradient changes);
        # fall back to the bootstrap rate while they fill.
        applied = np.full(n, config.bootstrap_rate)
    else:
        applied = eta / rho
    theta_new = theta - applied * g_tilde
    _check_finite(theta_new, "parameter update")
    # The update theta actually moved by feeds the next step's statistics.
    # Routing the guard divisor through the rate feedback is what keeps eta
    # bounded on objectives whose gradients saturate at large steps.
    delta_applied = theta_new - theta

    new_state = replace(
        state,
        grad_stats=grad_stats,
        dir_stats=dir_stats,
        gamma_stats=gamma_stats,
        secant_stats=secant_stats,
        adagrad_accum=accum,
        prev_grad=grad,
        prev_dir=direction,
        prev_delta=delta_applied,
        step_count=state.step_count + 1,
        last_direction=direction,
        last_gamma=gamma,
        last_g_tilde=g_tilde,
        last_alpha=alpha,
        last_eta=eta,
        last_rho=rho,
        last_applied_rate=applied,
    )
    return theta_new, new_state


def _bootstrap_step(
    theta: ParamVector,
    grad: ParamVector,
    direction: ParamVector,
    state: AdasecantState,
    config: OptimizerConfig,
) -> tuple[ParamVector, AdasecantState]:
    """No curvature information yet: small step along the direction, seed the
    gradient statistics from the first observations."""
    n = state.layout.n
    g_tilde = direction  # empty blend statistics give gamma = 0
    accum, rho = adagrad_guard(state.adagrad_accum, g_tilde)
    theta_new = theta - config.bootstrap_rate * direction
    _check_finite(theta_new, "bootstrap update")
    new_state = replace(
        state,
        grad_stats=from_first_sample(grad, config.tau_reset),
        dir_stats=from_first_sample(direction, config.tau_reset),
        adagrad_accum=accum,
        prev_grad=grad,
        prev_dir=direction,
        prev_delta=theta_new - theta,
        step_count=1,
        last_direction=direction,
        last_gamma=np.zeros(n),
        last_g_tilde=g_tilde,
        last_alpha=None,
        last_eta=np.full(n, config.bootstrap_rate),
        last_rho=np.ones(n),
        last_applied_rate=np.full(n, config.bootstrap_rate),
    )
    return theta_new, new_state


def applied_rates(state: AdasecantState) -> np.ndarray:
    """Per-parameter rate the most recent step actually applied."""
    if state.last_applied_rate is None:
        raise ValueError("no step taken yet")
    return state.last_applied_rate


def _check_finite(values: np.ndarray, stage: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(stage, int(np.flatnonzero(~np.isfinite(values))[0]))
