"""Fidelity and Bures distance of single-mode Gaussian states.

All inputs are dimensionless quadrature moments (vacuum variance 1/2).
Functions broadcast over leading axes, so whole trajectories can be passed
as (T, 2) means and (T, 2, 2) covariances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_DELTA_CLAMP = 1e-12


@dataclass(frozen=True)
class QuadratureState:
    mean: np.ndarray
    cov: np.ndarray


def _det2(a):
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def fidelity_moments(d1, s1, d2, s2):
    """Gaussian fidelity from means d and covariances s (broadcasting)."""
    d1, d2, s1, s2 = (np.asarray(v, dtype=float) for v in (d1, d2, s1, s2))
    ssum = s1 + s2
    det_sum = _det2(ssum)
    if np.any(det_sum <= 0):
        raise ValueError("sigma1 + sigma2 is singular; states are not valid")
    Delta = 4.0 * det_sum
    delta = 16.0 * (_det2(s1) - 0.25) * (_det2(s2) - 0.25)
    delta = np.where((delta < 0) & (delta > -_DELTA_CLAMP), 0.0, delta)
    dd = d2 - d1
    # (s1+s2)^-1 for 2x2: adj / det
    adj_quad = (ssum[..., 1, 1] * dd[..., 0] ** 2 - 2.0 * ssum[..., 0, 1] * dd[..., 0] * dd[..., 1]
                + ssum[..., 0, 0] * dd[..., 1] ** 2)
    expo = -0.5 * adj_quad / det_sum
    F = 2.0 / (np.sqrt(Delta + delta) - np.sqrt(delta)) * np.exp(expo)
    # identical moments: F = 1 exactly (round-off would give D_B ~ sqrt(eps))
    same = np.all(dd == 0, axis=-1) & np.all(s1 == s2, axis=(-2, -1))
    return np.where(same, 1.0, F)


def fidelity_gaussian(a: QuadratureState, b: QuadratureState) -> float:
    return float(fidelity_moments(a.mean, a.cov, b.mean, b.cov))


def bures_from_fidelity(F):
    F = np.clip(np.asarray(F, dtype=float), 0.0, 1.0)
    return np.sqrt(np.maximum(2.0 - 2.0 * np.sqrt(F), 0.0))


def bures_distance(a: QuadratureState, b: QuadratureState) -> float:
    return float(bures_from_fidelity(fidelity_gaussian(a, b)))


def trace_distance_bounds(dB):
    """Interval [dB^2/2, sqrt(1 - (1 - dB^2/2)^2)] that contains the trace distance."""
    dB = np.asarray(dB, dtype=float)
    if np.any(dB < 0) or np.any(dB > np.sqrt(2.0) * (1 + 1e-12)):
        raise ValueError("Bures distance must lie in [0, sqrt(2)]")
    lower = np.minimum(dB**2 / 2.0, 1.0)
    upper = np.sqrt(np.maximum(1.0 - (1.0 - lower) ** 2, 0.0))
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper
