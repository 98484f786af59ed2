"""Command-line front end: ``simulate``, ``threshold`` and ``sweep``.

Configs are flat JSON documents (``{"n": 2, "M": 16, "diffusion.kind":
"constant", "shape.kind": "concentrated", "shape.delta": 0.1, ...}``) checked
against a JSON schema that rejects unknown keys.  Flags override file values.

Exit codes: 0 completed/ok, 2 config error, 3 blow-up detected, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import io
from .analysis import (
    empirical_threshold,
    evaluate_criterion,
    monotone_outcomes,
    optimize_p,
    theoretical_threshold,
)
from .model import (
    ConcentratedBump,
    DiffusionLaw,
    Params,
    RadialGrid,
    SmoothBump,
    Uniform,
    make_initial_data,
)
from .solver import Scheme, SolverControls, integrate, virial_trace

log = logging.getLogger("radialks")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_FAILURE = 0, 2, 3, 4

_pos = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 2},
        "M": _pos,
        "p": {"type": "number", "minimum": 1},
        "diffusion.kind": {"enum": ["constant", "power_law", "porous_medium"]},
        "diffusion.c1": {"type": "number", "minimum": 0},
        "diffusion.c2": {"type": "number", "minimum": 0},
        "diffusion.alpha": {"type": "number", "minimum": 0},
        "diffusion.m": {"type": "number", "minimum": 1},
        "shape.kind": {"enum": ["uniform", "concentrated", "smooth"]},
        "shape.delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "grid.J": {"type": "integer", "minimum": 16},
        "grid.graded": {"type": "boolean"},
        "grid.ratio": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "controls.t_end": _pos,
        "controls.dt_init": _pos,
        "controls.dt_min": _pos,
        "controls.dt_max": _pos,
        "controls.cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "controls.u_cap": _pos,
        "controls.sample_every": {"type": "integer", "minimum": 1},
        "controls.scheme": {"enum": [s.value for s in Scheme]},
        "threshold.p_min": {"type": "number", "exclusiveMinimum": 1},
        "threshold.p_max": {"type": "number", "exclusiveMinimum": 1},
        "threshold.grid_size": {"type": "integer", "minimum": 1},
        "sweep.M_lo": _pos,
        "sweep.M_hi": _pos,
        "sweep.steps": {"type": "integer", "minimum": 1},
        "sweep.bisect": {"type": "boolean"},
        "sweep.bisection_steps": {"type": "integer", "minimum": 0},
        "output.dir": {"type": "string"},
        "output.format": {"enum": ["csv"]},
        "seed": {"type": "integer"},
    },
}

DEFAULTS = {
    "n": 2,
    "p": 2.0,
    "diffusion.kind": "constant",
    "shape.kind": "concentrated",
    "shape.delta": 0.1,
    "grid.J": 512,
    "grid.graded": False,
    "grid.ratio": 0.98,
    "controls.t_end": 1.0,
    "controls.dt_init": 1e-6,
    "controls.dt_min": 1e-12,
    "controls.dt_max": 1e-2,
    "controls.cfl": 0.4,
    "controls.u_cap": 1e8,
    "controls.sample_every": 10,
    "controls.scheme": Scheme.SEMI_IMPLICIT.value,
    "threshold.p_min": 1.01,
    "threshold.p_max": 16.0,
    "threshold.grid_size": 64,
    "sweep.steps": 5,
    "sweep.bisect": False,
    "sweep.bisection_steps": 12,
    "output.dir": ".",
    "output.format": "csv",
}


class ConfigError(ValueError):
    pass


def _coerce(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config(path: Optional[str], overrides: dict) -> dict:
    cfg: dict = {}
    if path is not None:
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    return {**DEFAULTS, **cfg}


def build_law(cfg: dict) -> DiffusionLaw:
    kind = cfg["diffusion.kind"]
    if kind == "constant":
        return DiffusionLaw.constant()
    if kind == "power_law":
        return DiffusionLaw.power_law(
            cfg.get("diffusion.c1", 0.0), cfg.get("diffusion.c2", 1.0), cfg.get("diffusion.alpha", 0.0)
        )
    return DiffusionLaw.porous_medium(cfg.get("diffusion.m", 1.0), cfg["n"])


def build_shape(cfg: dict):
    kind = cfg["shape.kind"]
    if kind == "uniform":
        return Uniform()
    cls = ConcentratedBump if kind == "concentrated" else SmoothBump
    return cls(cfg["shape.delta"])


def build_grid(cfg: dict) -> RadialGrid:
    if cfg["grid.graded"]:
        return RadialGrid.graded(cfg["grid.J"], cfg["grid.ratio"])
    return RadialGrid.uniform(cfg["grid.J"])


def build_controls(cfg: dict) -> SolverControls:
    keys = ("t_end", "dt_init", "dt_min", "dt_max", "cfl", "u_cap", "sample_every", "scheme")
    return SolverControls(**{k: cfg[f"controls.{k}"] for k in keys})


def build(cfg: dict):
    """Construct domain objects; every ``ValueError`` becomes a config error."""
    if "M" not in cfg:
        raise ConfigError("config needs a mean mass M")
    try:
        params = Params(cfg["n"], float(cfg["M"]), build_law(cfg), float(cfg["p"]))
        return params, build_shape(cfg), build_grid(cfg), build_controls(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _p_range(cfg):
    return (cfg["threshold.p_min"], cfg["threshold.p_max"])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: dict) -> int:
    params, shape, grid, controls = build(cfg)
    out = Path(cfg["output.dir"])
    u0 = make_initial_data(shape, params.M, params.n, grid)
    report = evaluate_criterion(u0, params)
    traj = integrate(u0, params, controls)
    out.mkdir(parents=True, exist_ok=True)
    io.write_trajectory(out / "trajectory.csv", traj.states)
    samples = virial_trace(traj) if len(traj.samples) >= 3 else traj.virial
    io.write_virial(out / "virial.csv", samples)
    oc = traj.outcome
    summary = {
        "outcome": oc.kind,
        "reason": oc.reason,
        "max_u": traj.max_u,
        "repairs": traj.repairs,
        "steps": traj.steps,
        "criterion": report.to_dict(),
        "config": cfg,
    }
    if oc.kind == "blowup":
        summary["t_star"] = oc.t
    elif oc.kind == "completed":
        summary["t_end"] = oc.t
    else:
        summary["t_failure"] = oc.t
    io.write_json(out / "summary.json", summary)
    log.info("simulate: %s (t=%.6g, max_u=%.6g)", oc.kind, oc.t, traj.max_u)
    return oc.exit_code


def cmd_threshold(cfg: dict) -> int:
    params, shape, grid, _ = build(cfg)
    out = Path(cfg["output.dir"])
    u0 = make_initial_data(shape, params.M, params.n, grid)
    report = evaluate_criterion(u0, params)
    p_opt, scan = optimize_p(u0, params, _p_range(cfg), cfg["threshold.grid_size"])
    payload = {
        "report": report.to_dict(),
        "p_optimal": p_opt,
        "all_feasible": scan.all_feasible,
        "any_feasible": scan.any_feasible,
        "M_critical_zero": report.M_critical_zero,
        "scan": [
            {**r.to_dict(), "score": s} for r, s in zip(scan.reports, scan.scores)
        ],
        "config": cfg,
    }
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "threshold.json", payload)
    return EXIT_OK


def _sweep_point(cfg: dict, M: float) -> tuple:
    params, shape, grid, controls = build({**cfg, "M": M})
    u0 = make_initial_data(shape, M, params.n, grid)
    p_opt, scan = optimize_p(u0, params, _p_range(cfg), cfg["threshold.grid_size"])
    best = scan.reports[int(np.argmin(scan.scores))]
    traj = integrate(u0, params, controls)
    oc = traj.outcome
    t_star = oc.t if oc.kind == "blowup" else None
    return (M, oc.kind, t_star, traj.max_u, scan.any_feasible, best.time_bound)


def cmd_sweep(cfg: dict, jobs: int = 1) -> int:
    lo, hi = cfg.get("sweep.M_lo"), cfg.get("sweep.M_hi")
    if lo is None or hi is None or not 0 < lo < hi:
        raise ConfigError("sweep needs 0 < M_lo < M_hi")
    params, shape, grid, controls = build({**cfg, "M": lo})
    out = Path(cfg["output.dir"])
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        if cfg["sweep.bisect"]:
            try:
                M_star, runs = empirical_threshold(
                    shape, params, lo, hi, controls, cfg["sweep.bisection_steps"], grid, pool
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            theory = theoretical_threshold(shape, params, grid, lo, hi, _p_range(cfg), cfg["threshold.grid_size"])
            payload = {
                "M_star_empirical": M_star,
                "M_star_theoretical": theory,
                "monotone": monotone_outcomes(runs),
                "runs": [
                    {"M": r.M, "outcome": r.outcome, "t": r.t_end, "max_u": r.max_u} for r in runs
                ],
                "config": cfg,
            }
            out.mkdir(parents=True, exist_ok=True)
            io.write_json(out / "bisect.json", payload)
        else:
            Ms = [float(M) for M in np.linspace(lo, hi, cfg["sweep.steps"] + 1)]
            if pool is not None:
                rows = list(pool.map(_sweep_point, [cfg] * len(Ms), Ms))
            else:
                rows = [_sweep_point(cfg, M) for M in Ms]
            out.mkdir(parents=True, exist_ok=True)
            io.write_rows(out / "sweep.csv", io.SWEEP_COLUMNS, rows)
    finally:
        if pool is not None:
            pool.shutdown()
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, help="seed for randomized profile generation")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key"
    )
    ap = argparse.ArgumentParser(prog="radialks", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate one configuration")
    sub.add_parser("threshold", parents=[common], help="evaluate the blow-up criterion")
    sw = sub.add_parser("sweep", parents=[common], help="scan or bisect over the mean mass")
    sw.add_argument("--M-lo", type=float, dest="M_lo")
    sw.add_argument("--M-hi", type=float, dest="M_hi")
    sw.add_argument("--steps", type=int)
    sw.add_argument("--bisect", action="store_true", default=None)
    sw.add_argument("--bisection-steps", type=int, dest="bisection_steps")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(asctime)s %(levelname)s %(message)s"
    )
    args = _parser().parse_args(argv)
    overrides: dict = {}
    try:
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k] = _coerce(v)
        overrides["output.dir"] = args.out
        overrides["seed"] = args.seed
        if args.command == "sweep":
            overrides.update(
                {
                    "sweep.M_lo": args.M_lo,
                    "sweep.M_hi": args.M_hi,
                    "sweep.steps": args.steps,
                    "sweep.bisect": args.bisect,
                    "sweep.bisection_steps": args.bisection_steps,
                }
            )
        cfg = load_config(args.config, overrides)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "threshold":
            return cmd_threshold(cfg)
        return cmd_sweep(cfg, max(1, args.jobs))
    except ConfigError as exc:
        print(f"radialks: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 4
        print(f"radialks: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
