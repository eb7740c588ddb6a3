"""Bures-distance trajectories, the information-backflow measure and parameter sweeps."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .greens import build_greens
from .mastereq import CLLimitParams, cl_propagate
from .metrics import bures_from_fidelity, fidelity_moments
from .model import GaussianState, ParameterError, PhysParams, TimeGrid, coherent_from_displacement
from .propagation import Trajectory, noise_matrix, propagate
from .spectral import NoiseConfig

log = logging.getLogger(__name__)

BACKENDS = ("exact", "cl_limit")
SWEEPABLE = ("gamma", "Omega", "kT")


@dataclass(frozen=True)
class BuresSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")


@dataclass(frozen=True)
class PairSpec:
    """Two coherent states, displacements in units of <x> sqrt(2 m omega0)."""

    x1: float = -3.0
    x2: float = 3.0
    p1: float = 0.0
    p2: float = 0.0

    def states(self, params: PhysParams) -> tuple[GaussianState, GaussianState]:
        return (coherent_from_displacement(self.x1, params, self.p1),
                coherent_from_displacement(self.x2, params, self.p2))


@dataclass(frozen=True)
class PairEvolution:
    first: Trajectory
    second: Trajectory
    bures: BuresSeries


def evolve_pair(s1: GaussianState, s2: GaussianState, params: PhysParams, grid: TimeGrid,
                cfg: NoiseConfig | None = None, backend: str = "exact", driving=None) -> PairEvolution:
    """Propagate both states with a shared Green's function and noise matrix."""
    times = grid.times
    if backend == "exact":
        sol = build_greens(params)
        noise = noise_matrix(sol, times, cfg)
        t1 = propagate(s1, sol, times, noise)
        t2 = propagate(s2, sol, times, noise)
        if driving is not None:
            from .driving import displacement_on_grid

            shift = displacement_on_grid(sol, driving, grid)
            t1 = Trajectory(times, t1.means + shift, t1.covs)
            t2 = Trajectory(times, t2.means + shift, t2.covs)
    elif backend == "cl_limit":
        if driving is not None:
            raise ParameterError("driving is only supported with the exact backend")
        p = CLLimitParams.from_params(params)
        t1 = cl_propagate(s1, p, times)
        t2 = cl_propagate(s2, p, times)
    else:
        raise ParameterError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    return PairEvolution(t1, t2, BuresSeries(times, _bures_along(t1, t2, params)))


def _bures_along(t1: Trajectory, t2: Trajectory, params: PhysParams) -> np.ndarray:
    sx = np.sqrt(params.m * params.omega0)
    scale = np.array([sx, 1.0 / sx])
    outer = np.outer(scale, scale)
    F = fidelity_moments(t1.means * scale, t1.covs * outer, t2.means * scale, t2.covs * outer)
    return bures_from_fidelity(F)


def bures_trajectory(s1: GaussianState, s2: GaussianState, params: PhysParams, grid: TimeGrid,
                     cfg: NoiseConfig | None = None, backend: str = "exact", driving=None) -> BuresSeries:
    return evolve_pair(s1, s2, params, grid, cfg, backend, driving).bures


def nonmarkovianity_measure(series: BuresSeries | np.ndarray, increment_tol: float = 1e-12) -> float:
    """Sum of the increases of the Bures distance between consecutive grid points."""
    values = np.asarray(series.values if isinstance(series, BuresSeries) else series, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two samples")
    inc = np.diff(values)
    return float(inc[inc > increment_tol].sum())


def measure(params: PhysParams, pair: PairSpec, grid: TimeGrid, cfg: NoiseConfig | None = None,
            backend: str = "exact") -> float:
    s1, s2 = pair.states(params)
    return nonmarkovianity_measure(bures_trajectory(s1, s2, params, grid, cfg, backend))


@dataclass
class SweepResult:
    axis1: str
    grid1: np.ndarray
    axis2: str
    grid2: np.ndarray
    measure: np.ndarray
    fixed: PhysParams
    t_max: float
    dt: float
    backend: str = "exact"
    failures: dict = field(default_factory=dict)

    def rows(self):
        """(value1, value2, N) in row-major order of (axis1, axis2)."""
        for i, a in enumerate(self.grid1):
            for j, b in enumerate(self.grid2):
                yield float(a), float(b), float(self.measure[i, j])


def _cell(task):
    params, pair, grid, cfg, backend = task
    try:
        return measure(params, pair, grid, cfg, backend), None
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        return float("nan"), f"{type(exc).__name__}: {exc}"


def default_workers() -> int:
    return int(os.environ.get("QBM_WORKERS", "1"))


def sweep(axis1: tuple[str, np.ndarray], axis2: tuple[str, np.ndarray], fixed: PhysParams,
          pair: PairSpec, grid: TimeGrid, cfg: NoiseConfig | None = None, backend: str = "exact",
          workers: int | None = None) -> SweepResult:
    """Measure on the product of two parameter grids.

    Cells are independent; with ``workers > 1`` they run in a process pool and
    are assembled in row-major order, so the result does not depend on the
    worker count.  A failing cell becomes NaN with its message in ``failures``.
    """
    (name1, g1), (name2, g2) = axis1, axis2
    for name in (name1, name2):
        if name not in SWEEPABLE:
            raise ParameterError(f"cannot sweep {name!r}; choose from {SWEEPABLE}")
    if name1 == name2:
        raise ParameterError("sweep axes must differ")
    g1 = np.atleast_1d(np.asarray(g1, dtype=float))
    g2 = np.atleast_1d(np.asarray(g2, dtype=float))
    if g1.size == 0 or g2.size == 0:
        raise ParameterError("sweep grids must be non-empty")
    cfg = cfg or NoiseConfig()
    tasks = [(fixed.with_(**{name1: a, name2: b}), pair, grid, cfg, backend) for a in g1 for b in g2]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, tasks))
    else:
        results = [_cell(t) for t in tasks]
    values = np.array([r[0] for r in results]).reshape(g1.size, g2.size)
    failures = {}
    for k, (_, msg) in enumerate(results):
        if msg is not None:
            i, j = divmod(k, g2.size)
            failures[(i, j)] = msg
            log.warning("sweep cell %s=%g, %s=%g failed: %s", name1, g1[i], name2, g2[j], msg)
    return SweepResult(name1, g1, name2, g2, values, fixed, grid.t_max, grid.dt, backend, failures)
