"""Green's functions of the damped oscillator with Lorentz-Drude memory friction.

Laplace transform: G2(z) = (z + Omega) / (z^3 + Omega z^2 + (w0^2 + 2 gamma Omega) z + w0^2 Omega),
G1(z) = z G2(z).  The time-domain functions are sums over the three simple
poles, G2(t) = sum_i d_i exp(z_i t) with d_i = (z_i + Omega) / prod_{j != i}(z_i - z_j).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import PhysParams

REPEATED_ROOT_RTOL = 1e-7
_IMAG_RTOL = 1e-9


class GreensError(ArithmeticError):
    """Roots or residues are inconsistent (non-real time-domain Green's function)."""


def cubic_coefficients(params: PhysParams) -> np.ndarray:
    """Monic cubic coefficients [1, c2, c1, c0] of the pole polynomial."""
    w2 = params.omega0**2
    O = params.Omega
    return np.array([1.0, O, w2 + 2.0 * params.gamma * O, w2 * O])


def cubic_discriminant(c2, c1, c0):
    """Discriminant of z^3 + c2 z^2 + c1 z + c0 (broadcasts).

    Positive: three distinct real roots.  Negative: one real root and a
    complex-conjugate pair.
    """
    return 18.0 * c2 * c1 * c0 - 4.0 * c2**3 * c0 + c2**2 * c1**2 - 4.0 * c1**3 - 27.0 * c0**2


def _companion_roots(coef: np.ndarray) -> np.ndarray:
    _, c2, c1, c0 = coef
    C = np.array([[-c2, -c1, -c0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    roots = np.linalg.eigvals(C).astype(complex)
    # Newton polish; eigvals is backward stable only relative to ||C||
    for _ in range(3):
        p = ((roots + c2) * roots + c1) * roots + c0
        dp = (3.0 * roots + 2.0 * c2) * roots + c1
        ok = dp != 0
        roots[ok] = roots[ok] - p[ok] / dp[ok]
    return roots


def _symmetrize(roots: np.ndarray, disc: float) -> np.ndarray:
    """Make real roots exactly real and a complex pair exactly conjugate."""
    order = np.argsort(np.abs(roots.imag))
    roots = roots[order]
    if disc < 0 or np.abs(roots[1:].imag).min() > 1e-12 * np.abs(roots).max():
        r0 = roots[0].real
        pair = roots[1] if roots[1].imag > 0 else roots[2]
        return np.array([r0, pair, np.conj(pair)])
    return np.sort(roots.real).astype(complex)


@dataclass(frozen=True)
class GreensSolution:
    roots: np.ndarray
    residues: np.ndarray
    discriminant: float
    params: PhysParams

    def G2(self, t):
        return self._series(t, 0)

    def eval(self, t):
        """(G1, G2, dG1, dG2) at time(s) t; see :func:`greens_eval`."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("Green's functions are evaluated for t >= 0")
        G2 = self._series(t, 0)
        dG2 = self._series(t, 1)
        ddG2 = self._series(t, 2)
        return dG2, G2, ddG2, dG2

    def _series(self, t, power):
        t = np.asarray(t, dtype=float)
        w = self.residues * self.roots**power
        s = np.exp(np.multiply.outer(t, self.roots)) @ w
        scale = 1.0 + np.abs(s.real)
        if np.any(np.abs(s.imag) > _IMAG_RTOL * scale):
            raise GreensError("imaginary residue in Green's function sum")
        return s.real


def build_greens(params: PhysParams) -> GreensSolution:
    """Poles and residues of the Laplace-domain Green's function.

    A (measure-zero) repeated root is avoided by nudging gamma by a relative
    1e-9, since the residue formula needs simple poles.
    """
    for attempt in range(4):
        coef = cubic_coefficients(params)
        disc = float(cubic_discriminant(*coef[1:]))
        roots = _symmetrize(_companion_roots(coef), disc)
        diff = roots[:, None] - roots[None, :]
        gap = np.abs(diff[np.triu_indices(3, 1)]).min()
        if gap >= REPEATED_ROOT_RTOL * np.abs(roots).max():
            break
        g = params.gamma
        params = replace(params, gamma=g * (1.0 + 1e-9) if g > 0 else 1e-9 * params.omega0)
    else:
        raise GreensError("could not separate repeated roots")
    np.fill_diagonal(diff, 1.0)
    residues = (roots + params.Omega) / diff.prod(axis=1)
    return GreensSolution(roots=roots, residues=residues, discriminant=disc, params=params)


def greens_eval(sol: GreensSolution, t):
    """Return (G1, G2, dG1, dG2) at t >= 0.

    G1 = dG2/dt follows from G1(z) = z G2(z) and G2(0) = 0.
    """
    return sol.eval(t)


def discriminant_map(gamma_grid, Omega_grid, omega0: float = 1.0) -> np.ndarray:
    """Sign of the pole-polynomial discriminant on a (gamma, Omega) mesh.

    Rows follow ``gamma_grid``, columns ``Omega_grid``.  -1 marks an
    oscillatory (complex-pair) region, +1 three real poles.
    """
    g = np.asarray(gamma_grid, dtype=float)[:, None]
    O = np.asarray(Omega_grid, dtype=float)[None, :]
    w2 = omega0**2
    return np.sign(cubic_discriminant(O, w2 + 2.0 * g * O, w2 * O)).astype(int)
