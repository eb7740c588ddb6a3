"""Exact first and second moments of the damped oscillator.

The noise part of the covariance needs double integrals of the form

    K(a, b; lam) = int_0^t du int_0^t du' exp(a u + b u') exp(-lam |u - u'|)
                 = dd(a + b, a - lam) + dd(a + b, b - lam),

where ``dd`` is the divided difference of E(c) = (exp(c t) - 1) / c.  With
the Green's function written as a sum over poles, every noise component is a
residue-weighted sum of K's, one K per Matsubara frequency.  The Matsubara
sum is split into a piece summed in closed form (a cotangent) and a remainder
falling off like 1/nu^3, which is truncated once successive partial sums move
by less than ``NoiseConfig.series_tol`` and then closed with an asymptotic
zeta tail.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import zeta

from .greens import GreensSolution
from .model import GaussianState, HEISENBERG_TOL, PhysParams
from .spectral import ConvergenceError, NoiseConfig, cot_sum, degenerate_index, matsubara, noise_kernel

_EM1_SMALL = 1e-6
_DD_SMALL = 1e-5
_POLE_RTOL = 1e-7
_FD_STEP = 1e-5
# exp(-nu t) must be negligible before the asymptotic tail is used
_EXP_CUT = 30.0
# asymptotic tail expansion in (max(Omega, |z|) / nu) starts here
_NMIN_FACTOR = 30.0
_N_BLOCK = 64


class PhysicalityError(ArithmeticError):
    """Propagated covariance violates the uncertainty relation."""


@dataclass(frozen=True)
class NoiseMatrix:
    """Noise additions to sxx, spp and the symmetrised spx (scalars or arrays over time)."""

    Ixx: np.ndarray
    Ipp: np.ndarray
    Ipx: np.ndarray

    def as_matrix(self) -> np.ndarray:
        Ixx, Ipp, Ipx = (np.asarray(v, dtype=float) for v in (self.Ixx, self.Ipp, self.Ipx))
        return np.stack([np.stack([Ixx, Ipx], -1), np.stack([Ipx, Ipp], -1)], -2)

    @classmethod
    def zero(cls, shape=()) -> "NoiseMatrix":
        z = np.zeros(shape)
        return cls(z, z.copy(), z.copy())


def em1(c, t):
    """(exp(c t) - 1) / c, equal to t in the c -> 0 limit."""
    c = np.asarray(c, dtype=complex)
    ct = c * t
    small = np.abs(ct) < _EM1_SMALL
    c_safe = np.where(small, 1.0, c)
    return np.where(small, t * (1.0 + ct / 2.0 + ct**2 / 6.0), np.expm1(ct) / c_safe)


def _dem1(c, t):
    """d/dc em1(c, t) = int_0^t u exp(c u) du."""
    c = np.asarray(c, dtype=complex)
    ct = c * t
    small = np.abs(ct) < 1e-3
    c_safe = np.where(small, 1.0, c)
    series = t**2 * (0.5 + ct / 3.0 + ct**2 / 8.0 + ct**3 / 30.0)
    direct = (t * np.exp(ct) - em1(c_safe, t)) / c_safe
    return np.where(small, series, direct)


def divided_em1(c1, c2, t):
    """(em1(c1) - em1(c2)) / (c1 - c2), smooth through c1 = c2."""
    c1 = np.asarray(c1, dtype=complex)
    c2 = np.asarray(c2, dtype=complex)
    close = np.abs(c1 - c2) * t < _DD_SMALL
    den = np.where(close, 1.0, c1 - c2)
    return np.where(close, _dem1(0.5 * (c1 + c2), t), (em1(c1, t) - em1(c2, t)) / den)


def _weights(sol: GreensSolution) -> np.ndarray:
    """Residue weights for the xx, pp and px double integrals, shape (3, 3, 3)."""
    d = sol.residues
    dz = d * sol.roots
    return np.stack([np.outer(d, d), np.outer(dz, dz), np.outer(dz, d)])


def _lam_K(W, A, z, lam, t):
    """lam * sum_ij W_ij K(z_i, z_j; lam) for each weight set, time and lam.

    W (k,3,3), A (T,3,3) = em1(z_i + z_j, t), lam (N,), t (T,) -> (k, T, N).
    Rates with z_j + lam ~ 0 are removable singularities of K; they are
    replaced by the average of the neighbours lam (1 +- h).
    """
    lam = np.asarray(lam, dtype=float)
    near = (np.abs(z[None, :] + lam[:, None]) < _POLE_RTOL * lam[:, None]).any(axis=1)
    if near.any():
        out = _lam_K_regular(W, A, z, lam, t)
        lo = _lam_K_regular(W, A, z, lam[near] * (1 - _FD_STEP), t)
        hi = _lam_K_regular(W, A, z, lam[near] * (1 + _FD_STEP), t)
        out[:, :, near] = 0.5 * (lo + hi)
        return out
    return _lam_K_regular(W, A, z, lam, t)


def _lam_K_regular(W, A, z, lam, t):
    inv = 1.0 / (z[None, :] + lam[:, None])                      # (N, j)
    B = em1(z[None, None, :] - lam[None, :, None], t[:, None, None])  # (T, N, i)
    AW = np.einsum("tij,kij->ktij", A, W)
    P1 = AW.sum(axis=2) @ inv.T                                  # sum_i then j against inv
    Q1 = AW.sum(axis=3) @ inv.T
    P2 = np.einsum("tni,kij,nj->ktn", B, W, inv)
    Q2 = np.einsum("tnj,kij,ni->ktn", B, W, inv)
    return (lam * (P1 - P2 + Q1 - Q2)).real


def _noise_bracket(sol: GreensSolution, t: np.ndarray, cfg: NoiseConfig) -> np.ndarray:
    """prefactor * sum_n I_alpha(t, n) / (Omega^2 - nu_n^2) for alpha = xx, pp, px; shape (3, T).

    Per time t the n-sum has three ranges.  For n < n_e(t), exp(-nu_n t) still
    matters and terms are evaluated in full.  For n_e(t) <= n <= N(t) the
    terms are rational in nu_n with time entering only through the 3x3 matrix
    em1(z_i + z_j, t), so they are summed once over n and shared by all
    times.  Past N(t), where the leading term size is below series_tol, a zeta
    tail closes the sum.
    """
    p = sol.params
    Om, kT = p.Omega, p.kT
    z = sol.roots
    W = _weights(sol)
    w = matsubara(1, kT)
    prefs = 2.0 * p.gamma * kT * Om**2 * np.array([1.0 / p.m, p.m, 1.0])

    A = em1(z[None, :, None] + z[None, None, :], t[:, None, None])   # (T, 3, 3)
    AW = np.einsum("tij,kij->ktij", A, W)
    twoA = 2.0 * AW.sum(axis=(2, 3)).real                             # (k, T)
    S_Om = _lam_K(W, A, z, np.array([Om]), t)[:, :, 0]

    n_deg = degenerate_index(Om, kT)
    if n_deg:
        hOm = _FD_STEP * Om
        dS = (_lam_K(W, A, z, np.array([Om + hOm]), t) - _lam_K(W, A, z, np.array([Om - hOm]), t))[:, :, 0]
        total = S_Om / Om**2 + 2.0 * (twoA - S_Om) * 0.75 / (n_deg * w) ** 2
        total += 2.0 * dS / (2.0 * hOm) / (2.0 * Om)
    else:
        total = S_Om / Om**2 + 2.0 * (twoA - S_Om) * cot_sum(Om / w) / w**2

    # (S(nu) - 2A) / (nu^2 - Omega^2) ~ -c1/nu^3 + c2/nu^4 + c3/nu^5
    zsum = z[:, None] + z[None, :]
    zsq = z[:, None] ** 2 + z[None, :] ** 2
    zcube = z[:, None] ** 3 + z[None, :] ** 3
    zmix = z[:, None] ** 2 - z[:, None] * z[None, :] + z[None, :] ** 2
    c1 = np.einsum("tij,kij->kt", A * zsum + 2.0, W).real
    c2 = np.einsum("tij,kij->kt", A * zsq, W).real
    c3 = np.einsum("tij,kij->kt", -A * zcube - 2.0 * zmix, W).real - c1 * Om**2

    zmax = max(Om, np.abs(z).max())
    n_min = int(np.ceil(_NMIN_FACTOR * zmax / w))
    # partial sums move by ~ 2 pref |c1| / nu^3 per term; stop once that is below tol
    lead = (2.0 * prefs[:, None] * np.abs(c1)).max(axis=0)
    n_tol = np.ceil(np.cbrt(lead / cfg.series_tol) / w)
    n_e = np.ceil(_EXP_CUT / (w * t)).astype(np.int64)
    N = np.maximum.reduce([n_tol.astype(np.int64), n_e, np.full(t.shape, n_min)])
    n_top = int(N.max())
    if n_top > cfg.n_cap:
        raise ConvergenceError(f"noise series needs {n_top} terms, above n_cap={cfg.n_cap}")

    n_all = np.arange(1, n_top + 1)
    nu_all = w * n_all
    skip = np.zeros(n_top, dtype=bool)
    if n_deg:
        skip[n_deg - 1] = True
    near_pole = (np.abs(z[None, :] + nu_all[:, None]) < _POLE_RTOL * nu_all[:, None]).any(axis=1)

    # explicit terms n < n_e(t)
    n_exp = int(min(n_e.max() - 1, n_top))
    for n0 in range(1, n_exp + 1, _N_BLOCK):
        n = np.arange(n0, min(n0 + _N_BLOCK, n_exp + 1))
        idx = np.flatnonzero(n_e > n0)
        nu = w * n
        den_n = np.where(skip[n - 1], 1.0, nu**2 - Om**2)
        rho = (_lam_K(W, A[idx], z, nu, t[idx]) - twoA[:, idx, None]) / den_n
        keep = (n[None, :] < n_e[idx, None]) & ~skip[n - 1][None, :]
        total[:, idx] += 2.0 * np.where(keep, rho, 0.0).sum(axis=2)

    # rational range n_e(t) <= n <= N(t) through prefix sums over n
    rational_skip = skip | near_pole
    # skipped entries may divide by zero; they are overwritten below
    den = np.where(rational_skip, 1.0, nu_all**2 - Om**2)
    nu_safe = np.where(rational_skip, 1.0, nu_all)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / (z[None, :] + nu_safe[:, None])                   # (n, j)
        u = 1.0 / (nu_safe[:, None] - z[None, :])                     # (n, i)
    a = nu_safe[:, None] * inv / den[:, None]                         # (n, 3)
    b = 1.0 / den
    c = nu_safe[None, :] / den[None, :] * (np.einsum("kij,ni,nj->kn", W, u, inv)
                                           + np.einsum("kij,nj,ni->kn", W, u, inv))
    a[rational_skip] = 0.0
    b = np.where(rational_skip, 0.0, b)
    c[:, rational_skip] = 0.0
    zero = np.zeros((1, 3), dtype=complex)
    Pa = np.concatenate([zero, np.cumsum(a, axis=0)])                # Pa[n] = sum_{m<=n}
    Pb = np.concatenate([[0.0], np.cumsum(b)])
    Pc = np.concatenate([np.zeros((3, 1), dtype=complex), np.cumsum(c, axis=1)], axis=1)
    lo = np.minimum(n_e, N + 1) - 1
    hi = N
    da = Pa[hi] - Pa[lo]                                              # (T, 3)
    rat = (np.einsum("ktj,tj->kt", AW.sum(axis=2), da) + np.einsum("kti,ti->kt", AW.sum(axis=3), da)
           - (Pc[:, hi] - Pc[:, lo]) - twoA * (Pb[hi] - Pb[lo])[None, :])
    total += 2.0 * rat.real

    # removable near-pole rates inside the rational range
    for n in np.flatnonzero(near_pole & ~skip) + 1:
        idx = np.flatnonzero((n_e <= n) & (n <= N))
        if idx.size:
            nu = np.array([w * n])
            rho = (_lam_K(W, A[idx], z, nu, t[idx])[:, :, 0] - twoA[:, idx]) / (nu[0] ** 2 - Om**2)
            total[:, idx] += 2.0 * rho

    q = N + 1.0
    total += 2.0 * (-c1 * zeta(3, q) / w**3 + c2 * zeta(4, q) / w**4 + c3 * zeta(5, q) / w**5)
    return prefs[:, None] * total


def noise_matrix(sol: GreensSolution, t, cfg: NoiseConfig | None = None) -> NoiseMatrix:
    """Closed-form noise contributions at time(s) t, summed over Matsubara frequencies."""
    cfg = cfg or NoiseConfig()
    p = sol.params
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if p.gamma > 0 and p.kT <= 0:
        raise ValueError("the Matsubara noise series needs kT > 0")
    out = np.zeros((3, t.size))
    pos = t > 0
    if p.gamma > 0 and pos.any():
        out[:, pos] = _noise_bracket(sol, t[pos], cfg)
    if not np.all(np.isfinite(out)):
        raise ConvergenceError("non-finite noise contribution (unhandled degeneracy)")
    if scalar:
        return NoiseMatrix(float(out[0, 0]), float(out[1, 0]), float(out[2, 0]))
    return NoiseMatrix(out[0], out[1], out[2])


def noise_oracle(sol: GreensSolution, t: float, params: PhysParams | None = None,
                 cfg: NoiseConfig | None = None, epsrel: float = 1e-10) -> NoiseMatrix:
    """Reference noise contributions by direct quadrature of the double integrals.

    The square [0, t]^2 is folded onto the lag tau = s - s':
    int int f(t-s) g(t-s') D1(s-s') = int_0^t D1(tau) [C_fg(tau) + C_gf(tau)] dtau,
    C_fg(tau) = int_tau^t f(u) g(u - tau) du.  The lag integral is adaptive
    (it carries the log singularity of D1 at tau = 0); the smooth inner
    correlation uses composite Gauss-Legendre panels.  Slow; meant for tests.
    """
    params = params or sol.params
    cfg = cfg or NoiseConfig(series_tol=1e-9)
    if t == 0 or params.gamma == 0:
        return NoiseMatrix(0.0, 0.0, 0.0)
    z, d = sol.roots, sol.residues
    x, wq = np.polynomial.legendre.leggauss(20)
    # 20 Gauss nodes integrate exp(z u) over a panel with |z| h <= 8 to round-off
    h = min(0.5, 8.0 / np.abs(z).max())
    coef = np.stack([d, d * z], axis=1)                               # G2, dG2 residue weights

    def correlations(tau):
        """int_0^{t-tau} f(v + tau) g(v) dv for (f, g) in {G2, dG2}^2, shape (2, 2)."""
        length = t - tau
        if length <= 0:
            return np.zeros((2, 2))
        npan = max(1, int(np.ceil(length / h)))
        edges = length * np.arange(npan + 1) / npan
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        v = (mid + half * x).ravel()
        wts = (half * wq).ravel()
        E = np.exp(np.multiply.outer(v, z))
        F = ((E * np.exp(tau * z)) @ coef).real
        Gs = (E @ coef).real
        return (F * wts[:, None]).T @ Gs

    def integrand(tau):
        C = correlations(tau)
        # xx: G2 G2, pp: dG2 dG2, px: dG2 G2 + G2 dG2 (folded square)
        folded = np.array([2.0 * C[0, 0], 2.0 * C[1, 1], C[1, 0] + C[0, 1]])
        return noise_kernel(tau, params, cfg) * folded

    # the kernel varies on 1/Omega and 1/(2 pi kT); split there
    cuts = sorted({c for c in (1.0 / params.Omega, 5.0 / params.Omega,
                               1.0 / matsubara(1, params.kT)) if c < t})
    edges = [0.0, *cuts, t]
    total = np.zeros(3)
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, _ = integrate.quad_vec(integrand, lo, hi, epsabs=1e-13, epsrel=epsrel, limit=2000)
        total += v
    m = params.m
    return NoiseMatrix(total[0] / (2.0 * m * m), total[1] / 2.0, total[2] / (2.0 * m))


def transfer_matrix(G1, G2, dG1, dG2, m: float) -> np.ndarray:
    """S with (x, p)(t) = S (x, p)(0); stacks over leading time axes."""
    G1, G2, dG1, dG2 = (np.asarray(v, dtype=float) for v in (G1, G2, dG1, dG2))
    return np.stack([np.stack([G1, G2 / m], -1), np.stack([m * dG1, dG2], -1)], -2)


def propagate_mean(state0: GaussianState, sol: GreensSolution, t):
    G1, G2, dG1, dG2 = sol.eval(t)
    S = transfer_matrix(G1, G2, dG1, dG2, sol.params.m)
    return S @ state0.mean


def propagate_covariance(state0: GaussianState, sol: GreensSolution, noise: NoiseMatrix, t,
                         check: bool = True):
    """S cov0 S^T + N at time(s) t; the congruence carries the 2 G1 G2 sxp cross term."""
    G1, G2, dG1, dG2 = sol.eval(t)
    S = transfer_matrix(G1, G2, dG1, dG2, sol.params.m)
    cov = S @ state0.cov @ np.swapaxes(S, -1, -2) + noise.as_matrix()
    if check:
        det = cov[..., 0, 0] * cov[..., 1, 1] - cov[..., 0, 1] ** 2
        if np.any(det < 0.25 - 1e-6):
            raise PhysicalityError(f"uncertainty relation violated: min det = {det.min():.6g}")
    return cov


@dataclass(frozen=True)
class Trajectory:
    """Moments of one initial state on a time grid."""

    times: np.ndarray
    means: np.ndarray   # (T, 2)
    covs: np.ndarray    # (T, 2, 2)


def propagate(state0: GaussianState, sol: GreensSolution, times, noise: NoiseMatrix | None = None,
              cfg: NoiseConfig | None = None) -> Trajectory:
    times = np.asarray(times, dtype=float)
    if noise is None:
        noise = noise_matrix(sol, times, cfg)
    return Trajectory(times, propagate_mean(state0, sol, times), propagate_covariance(state0, sol, noise, times))


def is_heisenberg_ok(covs, tol: float = HEISENBERG_TOL) -> np.ndarray:
    covs = np.asarray(covs)
    return covs[..., 0, 0] * covs[..., 1, 1] - covs[..., 0, 1] * covs[..., 1, 0] >= 0.25 - tol
