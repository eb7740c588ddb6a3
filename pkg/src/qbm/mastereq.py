"""High-temperature Born-Markov (Caldeira-Leggett master equation) limit.

Only the closed-form moments are provided: Green's functions of an ordinary
damped oscillator and the approximate noise contributions.  Valid for
gamma, omega0 << Omega << 2 pi kT; restricted here to the underdamped case.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import GaussianState, ParameterError, PhysParams, TimeGrid
from .propagation import NoiseMatrix, Trajectory, is_heisenberg_ok, transfer_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CLLimitParams:
    gamma: float
    kT: float
    m: float = 1.0
    omega0: float = 1.0

    def __post_init__(self):
        if self.m <= 0 or self.omega0 <= 0 or self.kT < 0 or self.gamma < 0:
            raise ParameterError("CL limit needs m, omega0 > 0 and gamma, kT >= 0")
        if self.gamma >= self.omega0:
            raise ParameterError("CL limit moments are implemented for gamma < omega0 only")

    @property
    def nu(self) -> float:
        return float(np.sqrt(self.omega0**2 - self.gamma**2))

    @classmethod
    def from_params(cls, params: PhysParams) -> "CLLimitParams":
        return cls(gamma=params.gamma, kT=params.kT, m=params.m, omega0=params.omega0)


def cl_greens_eval(p: CLLimitParams, t):
    """(G1, G2, dG1, dG2) of the ordinary damped oscillator."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    g, nu, w0 = p.gamma, p.nu, p.omega0
    e = np.exp(-g * t)
    s, c = np.sin(nu * t), np.cos(nu * t)
    G2 = s * e / nu
    dG2 = (c - g / nu * s) * e
    G1 = (g / nu * s + c) * e
    dG1 = -(w0**2 / nu) * s * e
    return G1, G2, dG1, dG2


def cl_noise_matrix(p: CLLimitParams, t) -> NoiseMatrix:
    t = np.asarray(t, dtype=float)
    g, nu, w0, m, kT = p.gamma, p.nu, p.omega0, p.m, p.kT
    e2 = np.exp(-2.0 * g * t)
    s2, c2, s1 = np.sin(2 * nu * t), np.cos(2 * nu * t), np.sin(nu * t)
    Ixx = kT / (m * w0**2) * (1.0 - e2 * (1.0 + g / nu * s2 + 2.0 * g**2 / nu**2 * s1**2))
    Ipp = m * kT * (1.0 - e2 * (w0**2 / nu**2 - g**2 / nu**2 * c2 - g / nu * s2))
    G2 = s1 * np.exp(-g * t) / nu
    Ipx = 2.0 * g * kT * G2**2
    return NoiseMatrix(Ixx, Ipp, Ipx)


def cl_propagate(state0: GaussianState, p: CLLimitParams, grid: TimeGrid | np.ndarray) -> Trajectory:
    """Moments on a grid.

    The limit is not of Lindblad form, so at low temperature the uncertainty
    relation can be transiently violated.  That is logged, not raised.
    """
    times = grid.times if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    S = transfer_matrix(*cl_greens_eval(p, times), p.m)
    means = S @ state0.mean
    covs = S @ state0.cov @ np.swapaxes(S, -1, -2) + cl_noise_matrix(p, times).as_matrix()
    bad = ~is_heisenberg_ok(covs)
    if np.any(bad):
        log.warning("CL limit violates the uncertainty relation at %d of %d times (kT/omega0 = %g)",
                    int(bad.sum()), bad.size, p.kT / p.omega0)
    return Trajectory(times, means, covs)
