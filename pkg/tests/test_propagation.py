import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbm.greens import build_greens
from qbm.model import GaussianState, PhysParams, coherent_from_displacement, coherent_state, quadrature_det
from qbm.propagation import (NoiseMatrix, PhysicalityError, divided_em1, em1, is_heisenberg_ok, noise_matrix,
                             noise_oracle, propagate, propagate_covariance, propagate_mean)
from qbm.spectral import NoiseConfig

P = PhysParams(gamma=0.1, Omega=100.0, kT=1.0)
SOL = build_greens(P)


def rel_close(a: NoiseMatrix, b: NoiseMatrix, rtol, floor=1e-10):
    for x, y in zip((a.Ixx, a.Ipp, a.Ipx), (b.Ixx, b.Ipp, b.Ipx)):
        assert abs(x - y) <= rtol * max(abs(y), floor / rtol), (x, y)


def test_em1_limits():
    t = 2.0
    np.testing.assert_allclose(em1(0.0, t), t)
    for c in (1e-9, -1e-8, 1e-7j):
        np.testing.assert_allclose(em1(c, t), np.expm1(c * t) / c, rtol=1e-12)
    np.testing.assert_allclose(em1(-3 + 1j, t), np.expm1((-3 + 1j) * t) / (-3 + 1j), rtol=1e-14)


@given(st.complex_numbers(max_magnitude=5), st.floats(1e-9, 1e-4), st.floats(0.1, 3))
def test_divided_difference_continuity(c, eps, t):
    exact = divided_em1(c, c + eps, t)
    close = divided_em1(c, c, t)
    assert abs(exact - close) <= 1e-4 * abs(close) + 1e-12 + abs(eps) * t**3 * np.exp(abs(c) * t)


@pytest.mark.parametrize("t", [0.5, 2.0, 10.0])
def test_noise_matrix_matches_oracle(t):
    rel_close(noise_matrix(SOL, t), noise_oracle(SOL, t), 1e-5)


@pytest.mark.parametrize("p, t", [(PhysParams(0.1, 100.0, 0.05), 3.0),
                                  (PhysParams(2.0, 0.5, 1.0), 4.0),
                                  (PhysParams(20.0, 100.0, 1.0), 1.0),
                                  (PhysParams(0.3, 2 * np.pi * 0.5, 0.5), 2.0)])
def test_noise_matrix_oracle_other_regimes(p, t):
    # low temperature, small cutoff, real poles, Omega on a Matsubara frequency
    sol = build_greens(p)
    rel_close(noise_matrix(sol, t), noise_oracle(sol, t), 1e-5)


def test_noise_zero_at_origin_and_without_coupling():
    nm = noise_matrix(SOL, 0.0)
    assert (nm.Ixx, nm.Ipp, nm.Ipx) == (0.0, 0.0, 0.0)
    no = noise_oracle(SOL, 0.0)
    assert (no.Ixx, no.Ipp, no.Ipx) == (0.0, 0.0, 0.0)
    free = noise_matrix(build_greens(P.with_(gamma=0.0)), np.array([0.0, 1.0, 5.0]))
    assert np.all(free.as_matrix() == 0)


def test_noise_mass_scaling():
    t = np.array([0.5, 3.0])
    a = noise_matrix(SOL, t)
    b = noise_matrix(build_greens(P.with_(m=2.0)), t)
    np.testing.assert_allclose(b.Ixx, a.Ixx / 2, rtol=1e-12)
    np.testing.assert_allclose(b.Ipp, a.Ipp * 2, rtol=1e-12)
    np.testing.assert_allclose(b.Ipx, a.Ipx, rtol=1e-12)


@pytest.mark.parametrize("p", [P, PhysParams(1.0, 5.0, 0.2), PhysParams(0.1, 100.0, 100.0)])
def test_cross_noise_is_half_derivative(p):
    sol = build_greens(p)
    t = np.array([0.7, 2.0, 6.0])
    h = 1e-4
    cfg = NoiseConfig(series_tol=1e-10)
    dIxx = (noise_matrix(sol, t + h, cfg).Ixx - noise_matrix(sol, t - h, cfg).Ixx) / (2 * h)
    np.testing.assert_allclose(noise_matrix(sol, t, cfg).Ipx, p.m / 2 * dIxx, rtol=1e-3)


def test_noise_tolerance_monotone():
    t = np.linspace(0.1, 20, 50)
    for p in (P, P.with_(kT=0.05)):
        sol = build_greens(p)
        loose = noise_matrix(sol, t).as_matrix()
        tight = noise_matrix(sol, t, NoiseConfig(series_tol=1e-10)).as_matrix()
        assert np.abs(loose - tight).max() < 1e-3


def test_noise_diagonal_nonnegative():
    t = np.linspace(0, 40, 401)
    for p in (P, P.with_(kT=0.01), P.with_(gamma=10.0)):
        nm = noise_matrix(build_greens(p), t)
        assert nm.Ixx.min() > -1e-9 and nm.Ipp.min() > -1e-9


def test_mean_free_oscillator():
    p = P.with_(gamma=0.0, m=2.0, omega0=1.5)
    s = coherent_state(0.7, -0.4, p)
    t = np.linspace(0, 20, 101)
    means = propagate_mean(s, build_greens(p), t)
    np.testing.assert_allclose(means[:, 0], 0.7 * np.cos(1.5 * t) - 0.4 * np.sin(1.5 * t) / 3.0, atol=1e-12)
    np.testing.assert_allclose(propagate_mean(s, SOL, 0.0), s.mean, atol=1e-15)


def test_mean_decays():
    s = coherent_from_displacement(3.0, P, p0=1.0)
    assert np.all(np.abs(propagate_mean(s, SOL, 300.0)) < 1e-10)


def test_covariance_initial_and_unitary():
    s = GaussianState((0.2, 0.1), [[0.8, 0.3], [0.3, 0.6]])
    cov0 = propagate_covariance(s, SOL, noise_matrix(SOL, 0.0), 0.0)
    np.testing.assert_allclose(cov0, s.cov, atol=1e-15)
    free = build_greens(P.with_(gamma=0.0))
    t = np.linspace(0, 30, 61)
    covs = propagate_covariance(s, free, noise_matrix(free, t), t)
    np.testing.assert_allclose(quadrature_det(covs, P), np.linalg.det(s.cov), rtol=1e-12)


def test_stationary_high_temperature():
    p = P.with_(kT=100.0)
    sol = build_greens(p)
    traj = propagate(coherent_state(0, 0, p), sol, np.array([40.0]))
    np.testing.assert_allclose(traj.covs[0, 0, 0], p.kT / (p.m * p.omega0**2), rtol=5e-2)
    np.testing.assert_allclose(traj.covs[0, 1, 1], p.m * p.kT, rtol=5e-2)


def test_equal_initial_covariance_stays_equal():
    t = np.linspace(0, 10, 101)
    nm = noise_matrix(SOL, t)
    a = propagate(coherent_from_displacement(-3, P), SOL, t, nm)
    b = propagate(coherent_from_displacement(3, P, p0=2.0), SOL, t, nm)
    np.testing.assert_array_equal(a.covs, b.covs)


def test_physicality_error():
    bad = NoiseMatrix(-0.45, -0.45, 0.0)
    with pytest.raises(PhysicalityError):
        propagate_covariance(coherent_state(0, 0, P), SOL, bad, 1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 1.5), st.floats(-1, 2.5), st.floats(-1.5, 2))
def test_heisenberg_along_trajectories(lg, lO, lT):
    p = PhysParams(10.0**lg, 10.0**lO, 10.0**lT)
    sol = build_greens(p)
    t = np.linspace(0, 25, 251)
    traj = propagate(coherent_from_displacement(1.0, p), sol, t)
    assert np.all(is_heisenberg_ok(traj.covs, 1e-6))
