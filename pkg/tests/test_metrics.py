import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbm.metrics import (QuadratureState, bures_distance, bures_from_fidelity, fidelity_gaussian, fidelity_moments,
                         trace_distance_bounds)

coord = st.floats(-5, 5)


def random_state(draw_vals):
    a, b, r, x, p = draw_vals
    # squeeze-rotate a thermal state: always physical
    n = 0.5 + a
    S = np.array([[np.exp(b), 0], [0, np.exp(-b)]])
    R = np.array([[np.cos(r), -np.sin(r)], [np.sin(r), np.cos(r)]])
    M = R @ S
    return QuadratureState(np.array([x, p]), n * M @ M.T)


state_args = st.tuples(st.floats(0, 3), st.floats(-1, 1), st.floats(0, np.pi), coord, coord)


def test_identical_states():
    s = QuadratureState(np.zeros(2), np.eye(2))
    assert fidelity_gaussian(s, s) == pytest.approx(1.0, abs=1e-15)
    assert bures_distance(s, s) == 0


def test_coherent_overlap():
    a = QuadratureState(np.array([-3 / np.sqrt(2), 0]), 0.5 * np.eye(2))
    b = QuadratureState(np.array([3 / np.sqrt(2), 0]), 0.5 * np.eye(2))
    np.testing.assert_allclose(fidelity_gaussian(a, b), np.exp(-9), rtol=1e-12)
    np.testing.assert_allclose(bures_distance(a, b), np.sqrt(2 - 2 * np.exp(-4.5)), rtol=1e-12)
    np.testing.assert_allclose(bures_distance(a, b), 1.40634, atol=1e-5)


def test_thermal_pair():
    a = QuadratureState(np.zeros(2), np.eye(2))
    b = QuadratureState(np.array([2.0, 0.0]), np.eye(2))
    np.testing.assert_allclose(fidelity_gaussian(a, b), np.exp(-1), rtol=1e-12)


def test_bures_limits():
    assert bures_from_fidelity(1.0) == 0
    np.testing.assert_allclose(bures_from_fidelity(0.0), np.sqrt(2))


def test_trace_distance_bounds():
    assert trace_distance_bounds(0.0) == (0.0, 0.0)
    np.testing.assert_allclose(trace_distance_bounds(np.sqrt(2)), (1.0, 1.0))
    lo, hi = trace_distance_bounds(0.88710)
    np.testing.assert_allclose(lo, 0.39347, atol=1e-5)
    # sqrt(1 - (1 - lo)^2); the bound evaluates to 0.79506
    np.testing.assert_allclose(hi, np.sqrt(1 - (1 - lo) ** 2), rtol=1e-15)
    np.testing.assert_allclose(hi, 0.79506, atol=1e-5)
    with pytest.raises(ValueError):
        trace_distance_bounds(1.5)


@given(state_args, state_args)
def test_fidelity_symmetric_and_bounded(u, v):
    a, b = random_state(u), random_state(v)
    f = fidelity_gaussian(a, b)
    assert 0 <= f <= 1 + 1e-12
    assert abs(f - fidelity_gaussian(b, a)) < 1e-12


@given(state_args, state_args, coord, coord)
def test_common_shift_invariance(u, v, dx, dp):
    a, b = random_state(u), random_state(v)
    shift = np.array([dx, dp])
    a2 = QuadratureState(a.mean + shift, a.cov)
    b2 = QuadratureState(b.mean + shift, b.cov)
    np.testing.assert_allclose(fidelity_gaussian(a2, b2), fidelity_gaussian(a, b), rtol=1e-9, atol=1e-300)


@given(st.floats(0, 1), st.floats(0, 1))
def test_bures_decreasing_in_fidelity(f1, f2):
    if f2 - f1 > 1e-12:
        assert bures_from_fidelity(f1) > bures_from_fidelity(f2)


def test_broadcasting():
    d1 = np.zeros((4, 2))
    d2 = np.outer(np.arange(4.0), [1.0, 0.0])
    s = np.broadcast_to(0.5 * np.eye(2), (4, 2, 2))
    np.testing.assert_allclose(fidelity_moments(d1, s, d2, s), np.exp(-np.arange(4.0) ** 2 / 2), rtol=1e-12)
