"""Blow-up criterion, critical masses, choice of ``p``, time bounds and
empirical thresholds."""
from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .functionals import bar_moment, energy_E, kappa
from .model import Params, RadialGrid, RadialState, Shape, make_initial_data
from .quadrature import adaptive_simpson
from .solver import SolverControls, integrate

__all__ = [
    "ThresholdReport",
    "PScan",
    "evaluate_criterion",
    "critical_mass_zero",
    "optimize_p",
    "blowup_time_bound",
    "empirical_threshold",
    "RunRecord",
    "DEFAULT_P_RANGE",
]

log = logging.getLogger(__name__)

DEFAULT_P_RANGE = (1.01, 16.0)


@dataclass(frozen=True)
class ThresholdReport:
    params: Params
    mbar: float
    E_at_mbar: float
    criterion_met: bool
    p_used: float
    p_optimal: Optional[float] = None
    M_critical_zero: Optional[float] = None
    time_bound: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "n": self.params.n,
            "M": self.params.M,
            "p_used": self.p_used,
            "mbar": self.mbar,
            "E_at_mbar": self.E_at_mbar,
            "criterion_met": self.criterion_met,
            "p_optimal": self.p_optimal,
            "M_critical_zero": self.M_critical_zero,
            "time_bound": self.time_bound,
        }


def _is_critical(params: Params) -> bool:
    n = params.n
    return abs(params.diffusion.alpha - (n - 2) / n) <= 1e-12


def critical_mass_zero(p: float, n: int, c1: float, c2: float = 0.0) -> float:
    """Least mean mass with ``E_{M,p}(0) <= 0`` for a critical diffusion bound.

    ``n (c1 p (p+1) kappa_p((n-2)/n))**(n/2)``.  In two dimensions the ``c2``
    term of the energy also survives at ``z = 0`` (its power of ``z`` is
    zero), so ``c1`` is replaced by ``c1 + c2`` there, which reproduces
    ``4 (p+1)`` for ``a = 1``.
    """
    c = c1 + c2 if n == 2 else c1
    if not c > 0:
        raise ValueError("critical mass needs a positive c1")
    if p <= 1:
        raise ValueError("critical mass needs p > 1")
    return n * (c * p * (p + 1) * kappa(p, (n - 2) / n, n)) ** (n / 2)


def blowup_time_bound(m0: float, params: Params) -> float:
    """Time for ``m' = E(m)`` started at ``m0`` to reach zero.

    Requires ``E(m0) < 0``; since ``E`` increases, ``-E >= -E(m0) > 0`` on
    ``[0, m0]`` and the integrand ``1/(-E)`` is bounded.
    """
    if m0 < 0:
        raise ValueError("moment must be nonnegative")
    E0 = float(energy_E(m0, params))
    if not E0 < 0:
        raise ValueError(f"time bound undefined: E(m0) = {E0} >= 0")
    if m0 == 0:
        return 0.0
    tol = 1e-8 * m0 / abs(E0)
    return adaptive_simpson(lambda z: -1.0 / float(energy_E(z, params)), 0.0, m0, tol)


def evaluate_criterion(u0: RadialState, params: Params) -> ThresholdReport:
    mbar = bar_moment(u0.u, params.p, u0.grid, params.n)
    E = float(energy_E(mbar, params))
    met = E < 0
    Mc = None
    law = params.diffusion
    if _is_critical(params) and (law.c1 > 0 or (params.n == 2 and law.c2 > 0)) and params.p > 1:
        Mc = critical_mass_zero(params.p, params.n, law.c1, law.c2)
    tb = blowup_time_bound(mbar, params) if met else None
    return ThresholdReport(params, mbar, E, met, params.p, None, Mc, tb)


@dataclass(frozen=True)
class PScan:
    p_values: np.ndarray
    reports: list
    scores: np.ndarray  # E(mbar_p) / (M/n)**(p+1)

    @property
    def feasible(self) -> np.ndarray:
        return np.array([r.criterion_met for r in self.reports])

    @property
    def all_feasible(self) -> bool:
        return bool(self.feasible.all())

    @property
    def any_feasible(self) -> bool:
        return bool(self.feasible.any())


def optimize_p(
    u0: RadialState,
    params: Params,
    p_range: Sequence[float] = DEFAULT_P_RANGE,
    grid_size: int = 64,
) -> tuple[float, PScan]:
    """Scan log-spaced ``p`` and pick the smallest normalised energy.

    Normalising by ``(M/n)**(p+1)`` makes values comparable across ``p``.
    """
    lo, hi = p_range
    if not (1 < lo <= hi) or grid_size < 1 or not math.isfinite(hi):
        raise ValueError(f"invalid p range {p_range}")
    ps = np.geomspace(lo, hi, grid_size) if grid_size > 1 else np.array([lo])
    reports = [evaluate_criterion(u0, params.with_p(float(p))) for p in ps]
    scores = np.array([r.E_at_mbar / params.mass ** (p + 1) for r, p in zip(reports, ps)])
    k = int(np.argmin(scores))
    reports[k] = replace(reports[k], p_optimal=float(ps[k]))
    return float(ps[k]), PScan(ps, reports, scores)


# ---------------------------------------------------------------------------
# empirical threshold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    M: float
    outcome: str
    t_end: float
    max_u: float


def _run(shape: Shape, params: Params, grid: RadialGrid, controls: SolverControls) -> RunRecord:
    u0 = make_initial_data(shape, params.M, params.n, grid)
    traj = integrate(u0, params, controls)
    return RunRecord(params.M, traj.outcome.kind, float(traj.outcome.t), traj.max_u)


def empirical_threshold(
    shape: Shape,
    params_template: Params,
    M_lo: float,
    M_hi: float,
    controls: SolverControls,
    bisection_steps: int = 12,
    grid: Optional[RadialGrid] = None,
    executor: Optional[Executor] = None,
) -> tuple[float, list[RunRecord]]:
    """Bisect on ``M`` between a completing and a blowing-up run.

    Returns the final bracket midpoint and every run performed, in order.
    The endpoint runs may be farmed out to ``executor``; bisection itself is
    sequential.
    """
    if not 0 < M_lo < M_hi:
        raise ValueError("need 0 < M_lo < M_hi")
    grid = grid if grid is not None else RadialGrid.graded(512)
    args = [(shape, params_template.with_M(M), grid, controls) for M in (M_lo, M_hi)]
    if executor is not None:
        runs = list(executor.map(_run, *zip(*args)))
    else:
        runs = [_run(*a) for a in args]
    if runs[0].outcome != "completed" or runs[1].outcome != "blowup":
        raise ValueError(
            f"invalid bracket: M_lo -> {runs[0].outcome}, M_hi -> {runs[1].outcome}"
        )
    lo, hi = M_lo, M_hi
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        rec = _run(shape, params_template.with_M(mid), grid, controls)
        runs.append(rec)
        log.info("bisection M=%.8g -> %s", mid, rec.outcome)
        if rec.outcome == "blowup":
            hi = mid
        elif rec.outcome == "completed":
            lo = mid
        else:
            raise RuntimeError(f"numerical failure at M={mid}")
    return 0.5 * (lo + hi), runs


def monotone_outcomes(runs: Sequence[RunRecord]) -> bool:
    """True when every blow-up happened at a larger ``M`` than every completion."""
    done = [r.M for r in runs if r.outcome == "completed"]
    blown = [r.M for r in runs if r.outcome == "blowup"]
    return not done or not blown or max(done) < min(blown)


def theoretical_threshold(
    shape: Shape,
    params_template: Params,
    grid: RadialGrid,
    M_lo: float,
    M_hi: float,
    p_range: Sequence[float] = DEFAULT_P_RANGE,
    grid_size: int = 64,
    tol: float = 1e-6,
) -> Optional[float]:
    """Smallest ``M`` (by bisection) for which some scanned ``p`` meets the criterion.

    Returns ``None`` if the criterion already holds at ``M_lo`` or fails at ``M_hi``.
    """

    def met(M):
        u0 = make_initial_data(shape, M, params_template.n, grid)
        _, scan = optimize_p(u0, params_template.with_M(M), p_range, grid_size)
        return scan.any_feasible

    if met(M_lo) or not met(M_hi):
        return None
    lo, hi = M_lo, M_hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if met(mid):
            hi = mid
        else:
            lo = mid
    return hi
