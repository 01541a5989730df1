import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from adasecant.numerics import make_rng
from adasecant.stats import (
    DegenerateStatisticsError,
    MovingAverageState,
    ema_update,
    from_first_sample,
    init_state,
    is_outlier,
    reset_tau,
    tau_update,
    variance_estimate,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


# --- ema_update -------------------------------------------------------------------


def test_tau_one_fully_replaces():
    out = ema_update(MovingAverageState(0.0, 0.0, 1.0), 4.0)
    assert out.mean == 4.0 and out.second_moment == 16.0


def test_tau_two_averages_halfway():
    out = ema_update(MovingAverageState(2.0, 4.0, 2.0), 4.0)
    assert out.mean == 3.0 and out.second_moment == 10.0
    assert out.tau == 2.0  # untouched


def test_matches_direct_recurrence_with_tau_schedule():
    rng = make_rng(5)
    samples = rng.normal(0.0, 1.0, 50)
    taus = rng.uniform(1.0, 10.0, 50)

    state = init_state()
    mean, second = 0.0, 0.0
    for x, tau in zip(samples, taus):
        state = ema_update(replace(state, tau=tau), float(x))
        w = 1.0 / tau
        mean = (1.0 - w) * mean + w * x
        second = (1.0 - w) * second + w * x * x
    assert_allclose(state.mean, mean, rtol=0, atol=1e-12)
    assert_allclose(state.second_moment, second, rtol=0, atol=1e-12)


def test_non_finite_sample_rejected():
    with pytest.raises(ValueError):
        ema_update(init_state(), float("nan"))
    with pytest.raises(ValueError):
        ema_update(init_state(3), np.array([0.0, np.inf, 1.0]))


@given(
    mean=finite_floats,
    second=st.floats(min_value=0, max_value=1e12),
    tau=st.floats(min_value=1.0, max_value=100.0),
    sample=finite_floats,
)
def test_new_mean_lies_between_old_mean_and_sample(mean, second, tau, sample):
    out = ema_update(MovingAverageState(mean, second, tau), sample)
    lo, hi = min(mean, sample), max(mean, sample)
    assert lo - 1e-9 * (1 + abs(lo)) <= out.mean <= hi + 1e-9 * (1 + abs(hi))


# --- tau_update -------------------------------------------------------------------


def test_consistent_constant_stream_gives_tau_one():
    # mean^2 == second_moment: the multiplier vanishes
    assert tau_update(MovingAverageState(3.0, 9.0, 7.0)) == 1.0


def test_zero_mean_stream_lengthens_memory():
    assert tau_update(MovingAverageState(0.0, 4.0, 7.0)) == 8.0


def test_tau_update_arithmetic():
    assert tau_update(MovingAverageState(1.0, 2.0, 4.0)) == 3.0


def test_zero_history_grows_by_one():
    assert tau_update(MovingAverageState(0.0, 0.0, 2.2)) == pytest.approx(3.2)


def test_negative_second_moment_rejected():
    with pytest.raises(DegenerateStatisticsError):
        tau_update(MovingAverageState(1.0, -1.0, 2.0))


@given(
    mean=finite_floats,
    ratio=st.floats(min_value=1.0, max_value=1e6),
    tau=st.floats(min_value=1.0, max_value=1e4),
)
def test_tau_never_drops_below_one(mean, ratio, tau):
    # any consistent state has second_moment >= mean^2
    second = mean * mean * ratio if mean != 0.0 else ratio - 1.0
    assert np.all(tau_update(MovingAverageState(mean, second, tau)) >= 1.0)


def test_constant_stream_drives_tau_to_one_and_mean_to_constant():
    state = init_state()
    c = 0.7
    for _ in range(50):
        pre = state
        state = ema_update(state, c)
        state = replace(state, tau=tau_update(pre))
    assert abs(state.tau - 1.0) < 1e-6
    assert abs(state.mean - c) < 1e-6


def test_zero_step_stream_grows_tau_by_one_each_step():
    state = init_state()
    expected = 2.2
    for _ in range(10):
        pre = state
        state = ema_update(state, 0.0)
        state = replace(state, tau=tau_update(pre))
        expected += 1.0
        assert state.tau == pytest.approx(expected, abs=1e-12)


# --- is_outlier -------------------------------------------------------------------


def test_sample_at_mean_is_not_outlier():
    assert not is_outlier(2.0, MovingAverageState(2.0, 9.0, 2.0))


def test_three_sigma_is_outlier():
    assert is_outlier(3.0, MovingAverageState(0.0, 1.0, 2.0))


def test_exactly_two_sigma_is_not_outlier():
    # strict inequality at the boundary
    assert not is_outlier(2.0, MovingAverageState(0.0, 1.0, 2.0))


def test_outlier_is_elementwise():
    state = MovingAverageState(np.zeros(3), np.ones(3), np.full(3, 2.0))
    out = is_outlier(np.array([3.0, 0.5, -2.5]), state)
    assert out.tolist() == [True, False, True]


def test_negative_variance_estimate_clamps_to_zero():
    # rounding can leave second_moment slightly below mean^2
    state = MovingAverageState(1.0, 1.0 - 1e-16, 2.0)
    assert variance_estimate(state) == 0.0
    assert is_outlier(1.0 + 1e-9, state)


# --- reset_tau --------------------------------------------------------------------


def test_reset_tau_overwrites_memory_length_only():
    state = MovingAverageState(1.5, 4.0, 57.3)
    out = reset_tau(state)
    assert out.tau == 2.2 and out.mean == 1.5 and out.second_moment == 4.0


def test_reset_tau_idempotent():
    assert reset_tau(reset_tau(MovingAverageState(0.0, 0.0, 9.0))).tau == 2.2


def test_next_update_after_reset_weights_sample_by_inverse_reset():
    state = reset_tau(MovingAverageState(0.0, 0.0, 50.0))
    out = ema_update(state, 1.0)
    assert_allclose(out.mean, 1.0 / 2.2, rtol=0, atol=1e-15)


# --- variance estimator behavior ----------------------------------------------------


def test_variance_estimate_tracks_true_variance_ordering():
    rng = make_rng(3)
    estimates = []
    for true_std in (0.5, 1.0, 2.0):
        state = from_first_sample(float(rng.normal(0.0, true_std)), tau=10.0)
        for _ in range(4000):
            state = ema_update(state, float(rng.normal(0.0, true_std)))
        est = variance_estimate(state)
        assert est >= 0.0
        estimates.append(est)
    assert estimates[0] < estimates[1] < estimates[2]


def test_from_first_sample_reproduces_observation_exactly():
    state = from_first_sample(np.array([2.0, -3.0]))
    assert state.mean.tolist() == [2.0, -3.0]
    assert state.second_moment.tolist() == [4.0, 9.0]
    assert np.all(state.tau == 2.2)
