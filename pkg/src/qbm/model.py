"""Physical parameters and Gaussian-state containers.

Natural units with hbar = 1 are used throughout. With the defaults m = 1 and
omega0 = 1 every number handed to the library is a ratio to the system
frequency (gamma/omega0, Omega/omega0, kT/omega0, t*omega0).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

HEISENBERG_TOL = 1e-9


class ParameterError(ValueError):
    """Raised for physically meaningless input parameters."""


@dataclass(frozen=True)
class PhysParams:
    """Oscillator mass and frequency plus the bath coupling, cutoff and temperature."""

    gamma: float
    Omega: float
    kT: float
    m: float = 1.0
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "Omega", "kT", "m", "omega0"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.m <= 0 or self.omega0 <= 0 or self.Omega <= 0:
            raise ParameterError("m, omega0 and Omega must be positive")
        if self.gamma < 0 or self.kT < 0:
            raise ParameterError("gamma and kT must be non-negative")

    def with_(self, **changes) -> "PhysParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_l = l*dt, l = 0..n_steps."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ParameterError("n_steps must be a positive integer")

    @classmethod
    def from_tmax(cls, t_max: float, dt: float) -> "TimeGrid":
        n = int(round(t_max / dt))
        return cls(dt=dt, n_steps=n)

    @property
    def t_max(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of a single-mode Gaussian state.

    ``cov`` holds the symmetrised moments ((sxx, sxp), (sxp, spp)) in physical
    units; ``mean`` is (<x>, <p>).
    """

    mean: np.ndarray
    cov: np.ndarray = field(repr=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ParameterError("state moments must be finite")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * (1.0 + np.abs(cov).max()):
            raise ParameterError("covariance must be symmetric")
        cov[1, 0] = cov[0, 1]
        if cov[0, 0] <= 0 or cov[1, 1] <= 0 or np.linalg.det(cov) <= 0:
            raise ParameterError("covariance must be positive definite")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def sxx(self) -> float:
        return float(self.cov[0, 0])

    @property
    def sxp(self) -> float:
        return float(self.cov[0, 1])

    @property
    def spp(self) -> float:
        return float(self.cov[1, 1])


def _quadrature_scales(params: PhysParams) -> tuple[float, float]:
    s = np.sqrt(params.m * params.omega0)
    return s, 1.0 / s


def coherent_state(x0: float, p0: float, params: PhysParams) -> GaussianState:
    """Coherent state displaced to (x0, p0): vacuum variances 1/(2 m w0) and m w0/2."""
    mw = params.m * params.omega0
    return GaussianState(mean=(x0, p0), cov=np.diag([0.5 / mw, 0.5 * mw]))


def coherent_from_displacement(u: float, params: PhysParams, p0: float = 0.0) -> GaussianState:
    """Coherent state with <x> sqrt(2 m w0) = u, i.e. u is the displacement in vacuum-width units."""
    return coherent_state(u / np.sqrt(2.0 * params.m * params.omega0), p0, params)


def to_quadratures(state: GaussianState, params: PhysParams) -> tuple[np.ndarray, np.ndarray]:
    """Dimensionless X = sqrt(m w0) x, P = p / sqrt(m w0) moments of ``state``."""
    sx, sp = _quadrature_scales(params)
    scale = np.array([sx, sp])
    return state.mean * scale, state.cov * np.outer(scale, scale)


def from_quadratures(mean_q, cov_q, params: PhysParams) -> GaussianState:
    sx, sp = _quadrature_scales(params)
    inv = np.array([1.0 / sx, 1.0 / sp])
    return GaussianState(mean=np.asarray(mean_q) * inv, cov=np.asarray(cov_q) * np.outer(inv, inv))


def quadrature_det(cov, params: PhysParams) -> np.ndarray:
    """det of the dimensionless covariance; works on stacks of 2x2 matrices.

    The quadrature rescaling has unit Jacobian, so this is det(cov) itself.
    """
    cov = np.asarray(cov)
    return cov[..., 0, 0] * cov[..., 1, 1] - cov[..., 0, 1] * cov[..., 1, 0]


def is_physical(state: GaussianState, params: PhysParams, tol: float = HEISENBERG_TOL) -> bool:
    return bool(quadrature_det(state.cov, params) >= 0.25 - tol)
