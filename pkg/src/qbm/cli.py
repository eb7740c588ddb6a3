"""Command-line interface: ``qbm <command> [--config FILE] [overrides]``.

Every quantity is given in units of omega0 (m = omega0 = hbar = 1).  A JSON
config file supplies defaults; flags override individual entries.  Exit codes:
0 success, 2 configuration error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from .driving import DrivingSpec
from .greens import GreensError
from .mastereq import CLLimitParams
from .model import ParameterError, PhysParams, TimeGrid
from .nonmarkov import BACKENDS, PairSpec, default_workers, evolve_pair, nonmarkovianity_measure, sweep
from .propagation import PhysicalityError
from .spectral import (ConvergenceError, NoiseConfig, damping_kernel, effective_spectral_density, noise_kernel,
                       resonance_cutoff, spectral_density)

log = logging.getLogger("qbm")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "gamma_over_omega0": 0.1,
    "Omega_over_omega0": 100.0,
    "kT_over_omega0": 1.0,
    "t_max_omega0": 40.0,
    "dt_omega0": 0.01,
    "x1": -3.0,
    "x2": 3.0,
    "p1": 0.0,
    "p2": 0.0,
    "backend": "exact",
    "series_tol": 1e-3,
    "n_cap": 1_000_000,
    "driving": None,
    "axis1": None,
    "axis2": None,
}

# sweep axis name in the config -> PhysParams field
AXIS_FIELDS = {"gamma_over_omega0": "gamma", "Omega_over_omega0": "Omega", "kT_over_omega0": "kT"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: PhysParams
    grid: TimeGrid
    noise: NoiseConfig
    pair: PairSpec
    backend: str
    driving: DrivingSpec | None
    axes: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _axis_values(spec) -> tuple[str, np.ndarray]:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError("sweep axis must be an object with a 'name'")
    name = spec["name"]
    if name not in AXIS_FIELDS:
        raise ConfigError(f"unknown sweep axis {name!r}; choose from {sorted(AXIS_FIELDS)}")
    if "values" in spec:
        vals = np.asarray(spec["values"], dtype=float)
    else:
        try:
            lo, hi, num = float(spec["min"]), float(spec["max"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"sweep axis {name!r} needs 'values' or min/max/num") from exc
        if spec.get("log", False):
            if lo <= 0 or hi <= 0:
                raise ConfigError("log-spaced axis needs positive bounds")
            vals = np.logspace(np.log10(lo), np.log10(hi), num)
        else:
            vals = np.linspace(lo, hi, num)
    if vals.ndim != 1 or vals.size == 0:
        raise ConfigError(f"sweep axis {name!r} is empty")
    return AXIS_FIELDS[name], vals


def _function_spec(spec, what):
    """Closed-form or sampled scalar function from a JSON description."""
    if spec is None:
        return None
    kind = spec.get("type")
    if kind == "constant":
        v = float(spec["value"])
        return lambda t: np.full(np.shape(t), v)
    if kind == "sin":
        a, w, ph = float(spec.get("amplitude", 1.0)), float(spec["omega"]), float(spec.get("phase", 0.0))
        return lambda t: a * np.sin(w * np.asarray(t) + ph)
    if kind == "samples":
        return (spec["t"], spec["values"])
    raise ConfigError(f"{what}: unknown function type {kind!r} (constant, sin, samples)")


def _driving(spec) -> DrivingSpec | None:
    if spec is None:
        return None
    if "force" not in spec:
        raise ConfigError("driving needs a 'force'")
    return DrivingSpec(float(spec.get("d0", 1.0)), _function_spec(spec["force"], "force"),
                       _function_spec(spec.get("bath_kernel"), "bath_kernel"))


def build_config(raw: dict) -> RunConfig:
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = {**DEFAULTS, **raw}
    params = PhysParams(gamma=float(cfg["gamma_over_omega0"]), Omega=float(cfg["Omega_over_omega0"]),
                        kT=float(cfg["kT_over_omega0"]))
    grid = TimeGrid.from_tmax(float(cfg["t_max_omega0"]), float(cfg["dt_omega0"]))
    noise = NoiseConfig(series_tol=float(cfg["series_tol"]), n_cap=int(cfg["n_cap"]))
    backend = cfg["backend"]
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}; choose from {list(BACKENDS)}")
    if backend == "cl_limit":
        CLLimitParams.from_params(params)
    axes = [_axis_values(cfg[k]) for k in ("axis1", "axis2") if cfg[k] is not None]
    if len(axes) == 2 and axes[0][0] == axes[1][0]:
        raise ConfigError("sweep axes must be distinct")
    pair = PairSpec(float(cfg["x1"]), float(cfg["x2"]), float(cfg["p1"]), float(cfg["p2"]))
    return RunConfig(params, grid, noise, pair, backend, _driving(cfg["driving"]), axes, cfg)


def _load(args) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    return build_config(raw)


def _write_csv(path, header, rows):
    fh = open(path, "w", newline="") if path and path != "-" else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def _echo(cfg: RunConfig) -> dict:
    return {k: v for k, v in cfg.raw.items() if v is not None}


def cmd_evolve(cfg: RunConfig, args):
    s1, s2 = cfg.pair.states(cfg.params)
    ev = evolve_pair(s1, s2, cfg.params, cfg.grid, cfg.noise, cfg.backend, cfg.driving)
    t, b = ev.bures.times, ev.bures.values
    sigma = np.gradient(b, t)
    cols = [t]
    for tr in (ev.first, ev.second):
        cols += [tr.means[:, 0], tr.means[:, 1], tr.covs[:, 0, 0], tr.covs[:, 0, 1], tr.covs[:, 1, 1]]
    cols += [b, sigma]
    header = ["t", "x1", "p1", "sxx1", "sxp1", "spp1", "x2", "p2", "sxx2", "sxp2", "spp2", "bures", "sigma"]
    _write_csv(args.out, header, zip(*cols))


def cmd_measure(cfg: RunConfig, args):
    s1, s2 = cfg.pair.states(cfg.params)
    ev = evolve_pair(s1, s2, cfg.params, cfg.grid, cfg.noise, cfg.backend, cfg.driving)
    out = {"config": _echo(cfg), "N": nonmarkovianity_measure(ev.bures), "t_max": cfg.grid.t_max,
           "dt": cfg.grid.dt, "backend": cfg.backend}
    text = json.dumps(out, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(cfg: RunConfig, args):
    if len(cfg.axes) != 2:
        raise ConfigError("sweep needs axis1 and axis2 in the config")
    res = sweep(cfg.axes[0], cfg.axes[1], cfg.params, cfg.pair, cfg.grid, cfg.noise, cfg.backend,
                workers=args.workers if args.workers is not None else default_workers())
    names = {v: k for k, v in AXIS_FIELDS.items()}
    header = [names[res.axis1], names[res.axis2], "N"]
    rows = list(res.rows())
    if args.resonance:
        if "kT" not in (res.axis1, res.axis2):
            kTs = [cfg.params.kT] * len(rows)
        else:
            k = 0 if res.axis1 == "kT" else 1
            kTs = [r[k] for r in rows]
        header.append("Omega_star")
        rows = [r + (float(resonance_cutoff(kT)),) for r, kT in zip(rows, kTs)]
    _write_csv(args.out, header, rows)
    if args.out and args.out != "-":
        side = {"config": _echo(cfg), "t_max": res.t_max, "dt": res.dt, "backend": res.backend,
                "missing": [{"cell": list(k), "error": v} for k, v in sorted(res.failures.items())]}
        with open(args.out + ".json", "w") as fh:
            fh.write(json.dumps(side, indent=2, sort_keys=True, default=_json_default) + "\n")


def cmd_resonance(cfg: RunConfig, args):
    if args.kT:
        kTs = np.asarray(args.kT, dtype=float)
    else:
        kTs = np.atleast_1d(cfg.params.kT)
    if np.any(kTs <= 0):
        raise ConfigError("kT must be positive")
    _write_csv(args.out, ["kT", "Omega_star"], [(k, resonance_cutoff(k)) for k in kTs])


def cmd_kernels(cfg: RunConfig, args):
    """J and J_eff at x = omega, damping and noise kernels at x = t."""
    x = np.linspace(args.x_max / args.num, args.x_max, args.num)
    p = cfg.params
    cols = [x, spectral_density(x, p), effective_spectral_density(x, p), damping_kernel(x, p),
            noise_kernel(x, p, cfg.noise)]
    _write_csv(args.out, ["x", "J", "J_eff", "damping_kernel", "noise_kernel"], zip(*cols))


def cmd_compare(cfg: RunConfig, args):
    s1, s2 = cfg.pair.states(cfg.params)
    ex = evolve_pair(s1, s2, cfg.params, cfg.grid, cfg.noise, "exact")
    cl = evolve_pair(s1, s2, cfg.params, cfg.grid, cfg.noise, "cl_limit")
    cols = [cfg.grid.times]
    header = ["t"]
    for tag, ev in (("exact", ex), ("cl", cl)):
        tr = ev.first
        cols += [tr.means[:, 0], tr.means[:, 1], tr.covs[:, 0, 0], tr.covs[:, 0, 1], tr.covs[:, 1, 1], ev.bures.values]
        header += [f"{c}_{tag}" for c in ("x1", "p1", "sxx", "sxp", "spp", "bures")]
    _write_csv(args.out, header, zip(*cols))


COMMANDS = {"evolve": cmd_evolve, "measure": cmd_measure, "sweep": cmd_sweep, "resonance": cmd_resonance,
            "kernels": cmd_kernels, "compare-mastereq": cmd_compare}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qbm", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", "-o", default="-", help="output path (default stdout)")
        for key in ("gamma_over_omega0", "Omega_over_omega0", "kT_over_omega0", "t_max_omega0", "dt_omega0",
                    "x1", "x2", "p1", "p2", "series_tol"):
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=float)
        sp.add_argument("--backend", choices=BACKENDS)
        if name == "sweep":
            sp.add_argument("--workers", type=int, help="worker processes (env QBM_WORKERS)")
            sp.add_argument("--resonance", action="store_true", help="append Omega_star(kT) column")
        if name == "resonance":
            sp.add_argument("--kT", type=float, nargs="+", help="temperatures (default: config kT)")
        if name == "kernels":
            sp.add_argument("--x-max", type=float, default=10.0)
            sp.add_argument("--num", type=int, default=200)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _load(args)
        if args.command == "kernels" and (args.num < 1 or args.x_max <= 0):
            raise ConfigError("kernels needs --num >= 1 and --x-max > 0")
        COMMANDS[args.command](cfg, args)
    except (ConfigError, ParameterError, KeyError, TypeError) as exc:
        print(f"qbm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, GreensError, PhysicalityError, FloatingPointError) as exc:
        print(f"qbm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
