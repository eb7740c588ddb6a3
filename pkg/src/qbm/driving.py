"""External driving by a c-number force.

A force coupling linearly to x (directly with strength d0 and through the bath
with memory kernel Lambda) shifts the means by a state-independent
displacement and leaves the covariance untouched.  Distances between two
driven states therefore equal the undriven ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .greens import GreensSolution
from .model import GaussianState, ParameterError, TimeGrid
from .propagation import propagate_mean

_SAMPLE_RTOL = 1e-9


def _as_function(spec, what: str) -> Callable:
    """Callable from a function or from samples ``(times, values)``."""
    if spec is None or callable(spec):
        return spec
    ts, vs = (np.asarray(a, dtype=float) for a in spec)
    if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2 or np.any(np.diff(ts) <= 0):
        raise ParameterError(f"{what} samples must be increasing 1-D (times, values) pairs")
    t_hi = ts[-1]

    def f(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < ts[0] - _SAMPLE_RTOL * abs(t_hi)) or np.any(t > t_hi * (1 + _SAMPLE_RTOL)):
            raise ParameterError(f"{what} is undefined outside [{ts[0]}, {t_hi}]")
        return np.interp(t, ts, vs)

    return f


@dataclass(frozen=True)
class DrivingSpec:
    """d0: direct coupling; force: F(t) as callable or samples; bath_kernel: optional Lambda(t)."""

    d0: float
    force: Callable | tuple
    bath_kernel: Callable | tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "force", _as_function(self.force, "force"))
        object.__setattr__(self, "bath_kernel", _as_function(self.bath_kernel, "bath kernel"))
        if self.bath_kernel is not None and abs(float(self.bath_kernel(0.0))) > 1e-12:
            raise ParameterError("bath kernel must vanish at t = 0")


def _trapz_conv(kernel: np.ndarray, f: np.ndarray, h: float) -> np.ndarray:
    """c_l = int_0^{t_l} kernel(t_l - s) f(s) ds on a uniform grid (trapezoid rule)."""
    full = np.convolve(kernel, f)[: f.size]
    return h * (full - 0.5 * (kernel[0] * f + kernel * f[0]))


def _subgrid(t: float, h: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be non-negative")
    if h <= 0:
        raise ParameterError("quadrature step must be positive")
    n = max(int(np.ceil(t / h - 1e-9)), 1)
    return np.linspace(0.0, t, n + 1)


def _eff_on(spec: DrivingSpec, s: np.ndarray) -> np.ndarray:
    F = np.asarray(spec.force(s), dtype=float) * np.ones_like(s)
    out = spec.d0 * F
    if spec.bath_kernel is not None and s.size > 1:
        lam = np.asarray(spec.bath_kernel(s), dtype=float) * np.ones_like(s)
        out = out + _trapz_conv(lam, F, s[1] - s[0])
    return out


def effective_force(spec: DrivingSpec, t: float, h: float) -> float:
    """d0 F(t) + int_0^t Lambda(t - s) F(s) ds with step close to h."""
    return float(_eff_on(spec, _subgrid(t, h))[-1])


def _displacement(sol: GreensSolution, spec: DrivingSpec, s: np.ndarray) -> np.ndarray:
    """(x_D, p_D) at every point of the uniform grid s."""
    m = sol.params.m
    _, G2, _, dG2 = sol.eval(s)
    Feff = _eff_on(spec, s)
    if s.size < 2:
        return np.zeros((s.size, 2))
    h = s[1] - s[0]
    return np.stack([_trapz_conv(G2, Feff, h) / m, _trapz_conv(dG2, Feff, h)], axis=-1)


def driven_means(state0: GaussianState, sol: GreensSolution, spec: DrivingSpec, t: float, h: float) -> np.ndarray:
    """Homogeneous mean plus the force-induced displacement at time t."""
    shift = _displacement(sol, spec, _subgrid(t, h))[-1]
    return propagate_mean(state0, sol, t) + shift


def displacement_on_grid(sol: GreensSolution, spec: DrivingSpec, grid: TimeGrid) -> np.ndarray:
    """(T, 2) displacement on a whole trajectory grid, convolution step = dt."""
    return _displacement(sol, spec, grid.times)
