"""Lorentz-Drude bath: spectral density, damping and noise kernels.

The noise kernel is evaluated from its Matsubara expansion.  Two pieces of
each term are summed over n in closed form (a cotangent sum and a logarithm),
leaving a remainder that falls off like 1/nu_n^3.  The remainder is summed
term by term until the term size drops below ``NoiseConfig.series_tol`` and
closed with an integral estimate of the tail.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expn, zeta

from .model import ParameterError, PhysParams

DEGENERACY_RTOL = 1e-8
_BLOCK = 256


class ConvergenceError(RuntimeError):
    """A Matsubara series did not reach its tolerance within ``n_cap`` terms."""


@dataclass(frozen=True)
class NoiseConfig:
    series_tol: float = 1e-3
    n_cap: int = 1_000_000

    def __post_init__(self):
        if not self.series_tol > 0:
            raise ParameterError("series_tol must be positive")
        if self.n_cap < 1:
            raise ParameterError("n_cap must be >= 1")


def matsubara(n, kT: float):
    """Bosonic Matsubara frequencies nu_n = 2 pi n kT (hbar = 1)."""
    return 2.0 * np.pi * np.asarray(n) * kT


def spectral_density(omega, params: PhysParams):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    O2 = params.Omega**2
    return 2.0 * params.m * params.gamma / np.pi * omega * O2 / (O2 + omega**2)


def damping_kernel(t, params: PhysParams):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("damping kernel is defined for t >= 0")
    return 2.0 * params.gamma * params.Omega * np.exp(-params.Omega * t)


def damping_kernel_laplace(z, params: PhysParams):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z + params.Omega) == 0):
        raise ZeroDivisionError("Laplace-transformed damping kernel has a pole at z = -Omega")
    return 2.0 * params.gamma * params.Omega / (z + params.Omega)


def _omega_coth(omega, kT):
    """omega * coth(omega / 2kT) with the omega -> 0 and kT -> 0 limits."""
    omega = np.asarray(omega, dtype=float)
    if kT == 0:
        return np.abs(omega)
    x = omega / (2.0 * kT)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = np.where(small, 2.0 * kT * (1.0 + x**2 / 3.0), omega / np.tanh(xs))
    return out


def effective_spectral_density(omega, params: PhysParams):
    """J(omega) coth(omega / 2kT); finite at omega = 0 where it tends to 4 m gamma kT / pi."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("effective spectral density is defined for omega >= 0")
    O2 = params.Omega**2
    return 2.0 * params.m * params.gamma / np.pi * O2 / (O2 + omega**2) * _omega_coth(omega, params.kT)


def resonance_cutoff(kT, omega0: float = 1.0):
    """Cutoff at which J_eff(omega) is stationary at omega = omega0.

    Omega* = omega0 sqrt((kT sinh(omega0/kT) + omega0) / (kT sinh(omega0/kT) - omega0)).
    """
    kT = np.asarray(kT, dtype=float)
    if np.any(kT <= 0):
        raise ValueError("resonance cutoff requires kT > 0")
    x = omega0 / kT
    with np.errstate(over="ignore"):
        s = np.sinh(x) / x  # kT sinh(omega0/kT) / omega0
    # s - 1 loses digits for small x
    sm1 = np.where(x < 1e-2, x**2 / 6 + x**4 / 120 + x**6 / 5040, s - 1.0)
    ratio = np.where(np.isinf(s), 1.0, (s + 1.0) / np.where(np.isinf(s), 1.0, sm1))
    out = omega0 * np.sqrt(ratio)
    return float(out) if out.ndim == 0 else out


def _kernel_term(nu, tau, Omega):
    """(Omega e^{-Omega tau} - nu e^{-nu tau}) / (Omega^2 - nu^2), nu >= 0, tau >= 0."""
    eO = np.exp(-Omega * tau)
    degenerate = np.abs(nu - Omega) < DEGENERACY_RTOL * Omega
    nu_safe = np.where(degenerate, 0.0, nu)
    regular = (Omega * eO - nu_safe * np.exp(-nu_safe * tau)) / (Omega**2 - nu_safe**2)
    limit = eO * (1.0 - Omega * tau) / (2.0 * Omega)
    return np.where(degenerate, limit, regular)


def cot_sum(a: float) -> float:
    """sum_{n>=1} 1 / (n^2 - a^2) for a >= 0 not an integer."""
    if a < 0.1:
        k = np.arange(1, 12)
        return float(np.sum(a ** (2 * k - 2) * zeta(2 * k)))
    return 1.0 / (2.0 * a * a) - np.pi / np.tan(np.pi * a) / (2.0 * a)


def degenerate_index(Omega: float, kT: float) -> int:
    """n >= 1 with nu_n == Omega to relative DEGENERACY_RTOL, else 0."""
    a = Omega / matsubara(1, kT)
    n = int(round(a))
    return n if n >= 1 and abs(a - n) < DEGENERACY_RTOL * a else 0


def noise_kernel(tau, params: PhysParams, cfg: NoiseConfig | None = None):
    """Symmetrised bath force correlation D1(tau) = <{B(tau), B(0)}>.

    Diverges logarithmically at tau = 0; requires kT > 0.
    """
    cfg = cfg or NoiseConfig()
    if params.kT <= 0:
        raise ValueError("the Matsubara form of the noise kernel needs kT > 0")
    scalar = np.ndim(tau) == 0
    tau = np.abs(np.atleast_1d(np.asarray(tau, dtype=float)))
    if np.any(tau == 0):
        raise ValueError("noise kernel diverges at tau = 0")
    w = matsubara(1, params.kT)
    Om = params.Omega
    pref = 4.0 * params.m * params.gamma * params.kT * Om**2
    eO = np.exp(-Om * tau)

    # T_n = -Om e^{-Om tau}/(nu^2 - Om^2) + e^{-nu tau}/nu + r_n,
    # r_n = Om^2 e^{-nu tau} / (nu (nu^2 - Om^2)); the first two sum in closed form
    n_deg = degenerate_index(Om, params.kT)
    total = eO / Om - 2.0 * np.log(-np.expm1(-w * tau)) / w
    if n_deg:
        nu = w * n_deg
        total += 2.0 * (-Om * eO * 0.75 / (n_deg * w) ** 2
                        + _kernel_term(nu, tau, Om) - np.exp(-nu * tau) / nu)
    else:
        total += -2.0 * Om * eO * cot_sum(Om / w) / w**2

    n_min = int(np.ceil(30.0 * Om / w))
    active = np.ones(tau.shape, dtype=bool)
    n_last = np.zeros(tau.shape, dtype=np.int64)
    n0, block = 1, _BLOCK
    while np.any(active):
        if n0 > cfg.n_cap:
            raise ConvergenceError(f"noise kernel series not converged within n_cap={cfg.n_cap}")
        n = np.arange(n0, min(n0 + block, cfg.n_cap + 1))
        nu = w * n
        idx = np.flatnonzero(active)
        ta = tau[idx][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = Om**2 * np.exp(-nu * ta) / (nu * (nu**2 - Om**2))
        if n_deg and n[0] <= n_deg <= n[-1]:
            r[:, n_deg - n[0]] = 0.0
        # each tau stops at its own first small term
        small = (2.0 * pref * np.abs(r) < cfg.series_tol) & (n >= n_min)
        hit = small.any(axis=1)
        stop = np.where(hit, small.argmax(axis=1), len(n) - 1)
        total[idx] += 2.0 * np.cumsum(r, axis=1)[np.arange(len(idx)), stop]
        n_last[idx] = n[stop]
        active[idx[hit]] = False
        n0 = n[-1] + 1
        block = min(2 * block, 1 << 16)

    # remaining r_n, n > N, by the midpoint-integral rule: int_M^inf e^{-a x}/x^3 = E_3(a M)/M^2
    M = n_last + 0.5
    tail = Om**2 / w**3 * expn(3, w * tau * M) / M**2 * (1.0 + Om**2 / (w * M) ** 2)
    total += 2.0 * tail
    out = pref * total
    return float(out[0]) if scalar else out
