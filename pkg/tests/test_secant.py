import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from adasecant.numerics import BlockLayout, make_rng, single_block
from adasecant.secant import (
    SecantStats,
    VanishingCurvatureError,
    alpha_update,
    block_normalize,
    directional_newton_step,
    expected_rate,
    expected_rate_cov,
    init_secant_stats,
)
from adasecant.stats import from_first_sample, ema_update


# --- block_normalize ---------------------------------------------------------


def test_single_block_unit_norm():
    d = block_normalize(np.array([3.0, 4.0]), single_block(2))
    assert_allclose(d, [0.6, 0.8], rtol=0, atol=1e-15)


def test_zero_block_stays_zero():
    layout = BlockLayout.from_sizes([("a", 2), ("b", 2)])
    d = block_normalize(np.array([3.0, 4.0, 0.0, 0.0]), layout)
    assert_allclose(d, [0.6, 0.8, 0.0, 0.0], rtol=0, atol=1e-15)


def test_per_block_scaling_discards_magnitude():
    layout = BlockLayout.from_sizes([("a", 1), ("b", 1)])
    d = block_normalize(np.array([1.0, 2.0]), layout)
    assert_array_equal(d, [1.0, 1.0])


def test_power_of_two_scaling_is_bit_identical():
    layout = BlockLayout.from_sizes([("w", 3), ("b", 2)])
    rng = make_rng(0)
    g = rng.normal(0.0, 1.0, 5)
    base = block_normalize(g, layout)
    for c in (2.0**-40, 0.25, 2.0, 2.0**40):
        assert_array_equal(block_normalize(c * g, layout), base)


@given(c=st.floats(min_value=1e-6, max_value=1e6), seed=st.integers(0, 2**32 - 1))
def test_positive_scaling_leaves_direction_unchanged(c, seed):
    layout = BlockLayout.from_sizes([("w", 3), ("b", 2)])
    g = make_rng(seed).normal(0.0, 1.0, 5)
    assert_allclose(block_normalize(c * g, layout), block_normalize(g, layout), atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_direction_is_a_descent_direction(seed):
    # angle to the gradient below 90 degrees for every nonzero gradient
    layout = BlockLayout.from_sizes([("w", 4), ("b", 2)])
    g = make_rng(seed).normal(0.0, 1.0, 6)
    assert np.dot(g, block_normalize(g, layout)) > 0.0


def test_nonzero_blocks_have_unit_norm():
    layout = BlockLayout.from_sizes([("w", 3), ("b", 2)])
    g = make_rng(5).normal(0.0, 3.0, 5)
    d = block_normalize(g, layout)
    assert_allclose(np.linalg.norm(d[:3]), 1.0, rtol=0, atol=1e-12)
    assert_allclose(np.linalg.norm(d[3:]), 1.0, rtol=0, atol=1e-12)


# --- deterministic secant rates -------------------------------------------------


def test_quadratic_rate_is_inverse_curvature():
    from adasecant.secant import secant_rate_deterministic

    rng = make_rng(1)
    for h in (0.1, 1.0, 2.0, 10.0):
        for _ in range(10):
            theta = float(rng.uniform(-1.0, 1.0))
            delta = float(rng.uniform(0.1, 1.0))
            alpha = h * (theta + delta) - h * theta
            assert abs(secant_rate_deterministic(delta, alpha) - 1.0 / h) < 1e-12


def test_identity_curvature_gives_unit_rate():
    from adasecant.secant import secant_rate_deterministic

    assert secant_rate_deterministic(0.3, 0.3) == 1.0


def test_vanishing_curvature_rejected():
    from adasecant.secant import secant_rate_deterministic

    with pytest.raises(VanishingCurvatureError):
        secant_rate_deterministic(1.0, 1e-9)


def test_two_dim_diagonal_quadratic_matches_matrix_oracle():
    from adasecant.secant import secant_rate_deterministic

    h_diag = np.array([1.0, 10.0])
    hessian = np.diag(h_diag)
    theta = np.array([0.8, -0.4])
    grad = h_diag * theta
    direction = -grad / np.linalg.norm(grad)
    delta = 0.05 * direction
    alpha = hessian @ delta  # exact on a quadratic

    rates = secant_rate_deterministic(delta, alpha)
    oracle = np.diag(np.diag(delta) @ np.linalg.inv(np.diag(hessian @ delta)))
    assert_allclose(rates, oracle, rtol=0, atol=1e-10)


# --- directional newton step ------------------------------------------------------


def test_identity_hessian_recovers_full_newton():
    grad = np.array([2.0, -1.0, 0.5])
    d = -grad / np.linalg.norm(grad)
    delta = directional_newton_step(grad, d, d)  # H = I so H d = d
    assert_allclose(delta, -grad, rtol=0, atol=1e-12)


def test_scalar_case():
    # h=4, g=2, d=-1: rate 1/4, step -0.5
    delta = directional_newton_step(np.array([2.0]), np.array([-4.0]), np.array([-1.0]))
    assert_allclose(delta, [-0.5], rtol=0, atol=1e-15)


def test_three_dim_spd_quadratic_matches_dense_oracle():
    rng = make_rng(6)
    a = rng.normal(0.0, 1.0, (3, 3))
    hessian = a @ a.T + 3.0 * np.eye(3)
    theta = rng.normal(0.0, 1.0, 3)
    grad = hessian @ theta
    direction = -grad / np.linalg.norm(grad)

    delta = directional_newton_step(grad, hessian @ direction, direction)
    oracle = -np.diag(direction) @ np.linalg.inv(np.diag(hessian @ direction)) @ grad
    assert_allclose(delta, oracle, rtol=0, atol=1e-10)

    # one step must shrink the gradient norm on this quadratic
    assert np.linalg.norm(hessian @ (theta + delta)) < np.linalg.norm(grad)


def test_zero_hessian_direction_component_rejected():
    with pytest.raises(ZeroDivisionError):
        directional_newton_step(np.ones(2), np.array([1.0, 0.0]), np.ones(2))


# --- alpha_update -------------------------------------------------------------------


def test_stationary_gradient_gives_zero_change():
    g = np.array([1.0, 2.0])
    assert_array_equal(alpha_update(g, g), [0.0, 0.0])


def test_elementwise_difference():
    assert_array_equal(alpha_update(np.array([3.0, 1.0]), np.array([1.0, 1.0])), [2.0, 0.0])


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        alpha_update(np.zeros(2), np.zeros(3))


def test_gradient_change_on_quadratic_equals_hessian_step_product():
    rng = make_rng(7)
    a = rng.normal(0.0, 1.0, (4, 4))
    hessian = a @ a.T + 2.0 * np.eye(4)
    theta = rng.normal(0.0, 1.0, 4)
    delta = rng.normal(0.0, 0.1, 4)
    g0 = hessian @ theta
    g1 = hessian @ (theta + delta)
    assert_allclose(alpha_update(g1, g0), hessian @ delta, rtol=0, atol=1e-10)


# --- stochastic expected rates ----------------------------------------------------------


def _constant_stats(delta: float, alpha: float) -> SecantStats:
    return SecantStats(
        from_first_sample(np.array([delta])),
        from_first_sample(np.array([alpha])),
        from_first_sample(np.array([alpha * delta])),
    )


def test_same_sign_constant_streams_floor_at_minimum():
    stats = _constant_stats(1.0, 1.0)
    assert expected_rate(stats) == 1e-8
    stats = _constant_stats(1.0, 2.0)
    assert expected_rate(stats) == 1e-8


def test_opposite_sign_constant_streams_double_the_ratio():
    stats = _constant_stats(1.0, -2.0)
    assert_allclose(expected_rate(stats), 2 * 0.5, rtol=1e-6)


def test_stochastic_stream_matches_formula_replay():
    rng = make_rng(8)
    stats = init_secant_stats(1)
    eps, eta_min = 1e-7, 1e-8
    for _ in range(200):
        delta = float(rng.normal(0.0, 0.3))
        alpha = 2.0 * delta + float(rng.normal(0.0, 0.2))
        stats = SecantStats(
            ema_update(stats.delta, np.array([delta])),
            ema_update(stats.alpha, np.array([alpha])),
            ema_update(stats.cross, np.array([alpha * delta])),
        )
    e_d2 = float(stats.delta.second_moment[0])
    e_a2 = float(stats.alpha.second_moment[0])
    e_ad = float(stats.cross.mean[0])
    replay = max(np.sqrt(e_d2) / (np.sqrt(e_a2) + eps) - e_ad / (e_a2 + eps), eta_min)
    got = expected_rate(stats, eta_min, eps)
    assert_allclose(got, [replay], rtol=0, atol=1e-12)
    assert replay > 0.0

    cov = e_ad - float(stats.alpha.mean[0]) * float(stats.delta.mean[0])
    replay_cov = max(np.sqrt(e_d2) / (np.sqrt(e_a2) + eps) - cov / (e_a2 + eps), eta_min)
    assert_allclose(expected_rate_cov(stats, eta_min, eps), [replay_cov], rtol=0, atol=1e-12)


def test_cov_form_coincides_when_either_mean_is_zero():
    from dataclasses import replace

    stats = SecantStats(
        from_first_sample(np.array([0.5])),
        from_first_sample(np.array([1.5])),
        from_first_sample(np.array([0.75])),
    )
    # zero mean on the alpha stream, second moment kept
    stats = SecantStats(stats.delta, replace(stats.alpha, mean=np.array([0.0])), stats.cross)
    assert_array_equal(expected_rate(stats), expected_rate_cov(stats))


def test_constant_same_sign_cov_form_gives_plain_ratio():
    stats = _constant_stats(1.0, 2.0)
    # covariance of constant streams is exactly zero
    assert_allclose(expected_rate_cov(stats), 0.5, rtol=1e-6)


@given(
    delta=st.floats(min_value=-100, max_value=100),
    alpha=st.floats(min_value=-100, max_value=100),
)
def test_rate_never_below_floor(delta, alpha):
    stats = _constant_stats(delta, alpha)
    assert np.all(expected_rate(stats) >= 1e-8)
    assert np.all(expected_rate_cov(stats) >= 1e-8)
