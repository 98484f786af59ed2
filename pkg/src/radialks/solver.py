"""Time integration of the mass-function equation

    dU/dt = r**(n-1) d/dr A(u) - r**(n-1) u dv/dr,   dv/dr = M r/n - r**(1-n) U,

with ``U(t, 0) = 0`` and ``U(t, 1) = M/n``.

The update is a finite-volume scheme written directly for the nodal values
of ``U``: cell densities are ``u_c = (U_{c+1} - U_c)/(s_{c+1} - s_c)``, the
diffusive flux at node ``j`` differences ``A(u)`` between the two adjacent
cells, and the drift flux is upwinded.  The implicit variant uses the secant
linearisation ``A(u_new) ~ (A(u_old)/u_old) u_new`` and implicit upwind
drift, which yields an M-matrix and therefore a monotone ``U`` for any step.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .functionals import VirialSample, virial_sample
from .model import Params, RadialGrid, RadialState

__all__ = [
    "Scheme",
    "SolverControls",
    "Outcome",
    "Trajectory",
    "NumericalFailure",
    "step",
    "integrate",
    "virial_trace",
    "repair_monotone",
]

log = logging.getLogger(__name__)

_MAX_REPAIR_STREAK = 10**6
_DT_GROWTH = 1.5


class Scheme(str, enum.Enum):
    EXPLICIT_EULER = "explicit_euler"
    SEMI_IMPLICIT = "semi_implicit_diffusion"


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverControls:
    t_end: float
    dt_init: float = 1e-6
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    cfl: float = 0.4
    u_cap: float = 1e8
    sample_every: int = 10
    scheme: Scheme = Scheme.SEMI_IMPLICIT

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.u_cap > 0:
            raise ValueError("u_cap must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "dt_init": self.dt_init,
            "dt_min": self.dt_min,
            "dt_max": self.dt_max,
            "cfl": self.cfl,
            "u_cap": self.u_cap,
            "sample_every": self.sample_every,
            "scheme": self.scheme.value,
        }


@dataclass(frozen=True)
class Outcome:
    """How a run ended: ``completed``, ``blowup`` or ``failure``."""

    kind: str
    t: float
    reason: Optional[str] = None

    @property
    def exit_code(self) -> int:
        return {"completed": 0, "blowup": 3, "failure": 4}[self.kind]


@dataclass(frozen=True, eq=False)
class Trajectory:
    params: Params
    controls: SolverControls
    samples: list
    outcome: Outcome
    max_u: float = 0.0
    repairs: int = 0
    steps: int = 0

    @property
    def states(self) -> list:
        return [s for s, _ in self.samples]

    @property
    def virial(self) -> list:
        return [v for _, v in self.samples]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s, _ in self.samples])


# ---------------------------------------------------------------------------
# discretisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Geometry:
    r: np.ndarray
    ds: np.ndarray  # cell volumes in s
    g: np.ndarray  # r_j**(n-1) / (rho_j - rho_{j-1}) at interior nodes
    w: np.ndarray  # r_j**(n-1) at interior nodes
    h_node: np.ndarray  # smaller adjacent spacing at interior nodes
    h_min: float


def _geometry(grid: RadialGrid, n: int) -> _Geometry:
    r = grid.nodes
    s = grid.s(n)
    centers = 0.5 * (r[1:] + r[:-1])
    h = np.diff(r)
    rin = r[1:-1]
    return _Geometry(
        r=r,
        ds=np.diff(s),
        g=rin ** (n - 1) / np.diff(centers),
        w=rin ** (n - 1),
        h_node=np.minimum(h[1:], h[:-1]),
        h_min=float(h.min()),
    )


def repair_monotone(U: np.ndarray, mass: float) -> tuple[np.ndarray, bool]:
    """Clip to ``[0, M/n]`` and sort; returns the repaired array and whether
    any increment fell below ``-1e-12 * M/n``."""
    dU = np.diff(U)
    if np.all(dU >= 0):
        return U, False
    significant = bool(dU.min() < -1e-12 * mass)
    out = np.sort(np.clip(U, 0.0, mass))
    out[0], out[-1] = 0.0, mass
    return out, significant


def _drift(U, geo: _Geometry, M: float, n: int) -> np.ndarray:
    rin = geo.r[1:-1]
    return M * rin / n - U[1:-1] / rin ** (n - 1)


def _advance(U, dt, geo: _Geometry, params: Params, scheme: Scheme) -> np.ndarray:
    n, M = params.n, params.M
    law = params.diffusion
    mass = M / n
    u = np.diff(U) / geo.ds
    vel = _drift(U, geo, M, n)
    vp, vm = np.maximum(vel, 0.0), np.minimum(vel, 0.0)
    ds_lo, ds_hi = geo.ds[:-1], geo.ds[1:]
    if scheme is Scheme.EXPLICIT_EULER:
        Au = law.A(u)
        diff = geo.g * (Au[1:] - Au[:-1])
        drift = geo.w * (vp * u[:-1] + vm * u[1:])
        U_new = U.copy()
        U_new[1:-1] = U[1:-1] + dt * (diff - drift)
    else:
        D = law.secant(u)
        lo = dt * (geo.g * D[:-1] + geo.w * vp) / ds_lo  # couples U_{j-1}
        hi = dt * (geo.g * D[1:] - geo.w * vm) / ds_hi  # couples U_{j+1}
        m = lo.size
        ab = np.zeros((3, m))
        ab[0, 1:] = -hi[:-1]
        ab[1] = 1.0 + lo + hi
        ab[2, :-1] = -lo[1:]
        rhs = U[1:-1].copy()
        rhs[-1] += hi[-1] * mass
        U_new = np.empty_like(U)
        U_new[1:-1] = solve_banded((1, 1), ab, rhs, check_finite=False)
    U_new[0], U_new[-1] = 0.0, mass
    if not np.all(np.isfinite(U_new)):
        raise NumericalFailure("non-finite mass function after step")
    return U_new


def step(state: RadialState, dt: float, params: Params, scheme: Scheme = Scheme.SEMI_IMPLICIT) -> RadialState:
    """Advance one step of size ``dt``; monotonicity is repaired if needed."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    geo = _geometry(state.grid, params.n)
    U = _advance(state.U, dt, geo, params, Scheme(scheme))
    U, _ = repair_monotone(U, params.M / params.n)
    return RadialState(state.t + dt, state.grid, params.n, U)


def _stable_dt(U, geo: _Geometry, params: Params, controls: SolverControls) -> float:
    n, M = params.n, params.M
    u = np.diff(U) / geo.ds
    vel = np.abs(_drift(U, geo, M, n))
    dt = controls.dt_max
    with np.errstate(divide="ignore"):
        adv = np.min(geo.h_node / vel) if np.any(vel > 0) else math.inf
    dt = min(dt, controls.cfl * adv)
    umax = float(u.max())
    if umax > 0:
        dt = min(dt, controls.cfl / umax)
    if controls.scheme is Scheme.EXPLICIT_EULER:
        amax = float(np.max(params.diffusion.a(u)))
        if amax > 0:
            dt = min(dt, controls.cfl * geo.h_min**2 / amax)
    return float(dt)


def integrate(u0: RadialState, params: Params, controls: SolverControls) -> Trajectory:
    """Integrate until ``t_end``, amplitude cap, step underflow or failure.

    The step is ``min(dt_max, cfl * h/|v'|, cfl/max u)`` (plus the diffusive
    limit ``cfl * h**2/max a(u)`` for the explicit scheme), and may grow by at
    most a factor 1.5 per step starting from ``dt_init``.
    """
    if abs(u0.U[-1] - params.M / params.n) > 1e-10 * params.M / params.n:
        raise ValueError("initial state does not carry mean mass M")
    grid, n = u0.grid, params.n
    geo = _geometry(grid, n)
    mass = params.M / n
    U = np.array(u0.U, dtype=float)
    t = float(u0.t)
    samples = [(u0, virial_sample(u0, params))]
    dt_prev = controls.dt_init / _DT_GROWTH
    max_u = float(np.max(np.diff(U) / geo.ds))
    repairs = streak = steps = 0
    outcome = None

    def record(t, U):
        st = RadialState(t, grid, n, U)
        samples.append((st, virial_sample(st, params)))

    while outcome is None:
        if max_u >= controls.u_cap:
            outcome = Outcome("blowup", t, "u_cap")
            break
        dt = min(_stable_dt(U, geo, params, controls), _DT_GROWTH * dt_prev)
        if dt < controls.dt_min:
            outcome = Outcome("blowup", t, "dt_underflow")
            break
        last = t + dt >= controls.t_end
        if last:
            dt = controls.t_end - t
        try:
            U_new = _advance(U, dt, geo, params, controls.scheme)
        except NumericalFailure as exc:
            outcome = Outcome("failure", t, str(exc))
            break
        U_new, repaired = repair_monotone(U_new, mass)
        if repaired:
            repairs += 1
            streak += 1
            if streak > _MAX_REPAIR_STREAK:
                outcome = Outcome("failure", t, "too many consecutive monotonicity repairs")
                break
        else:
            streak = 0
        U = U_new
        t = controls.t_end if last else t + dt
        dt_prev = dt
        steps += 1
        max_u = max(max_u, float(np.max(np.diff(U) / geo.ds)))
        if last:
            outcome = Outcome("completed", t)
        elif steps % controls.sample_every == 0:
            record(t, U)
    if samples[-1][0].t != t:
        record(t, U)
    log.info("run finished: %s at t=%.6g after %d steps", outcome.kind, outcome.t, steps)
    return Trajectory(params, controls, samples, outcome, max_u, repairs, steps)


def virial_trace(traj: Trajectory, p: Optional[float] = None) -> list[VirialSample]:
    """Virial samples with the finite-difference rate ``dm_p/dt`` filled in.

    Second-order differences on the (non-uniform) sample times, one-sided at
    the two ends.
    """
    if len(traj.samples) < 3:
        raise ValueError("virial trace needs at least three samples")
    params = traj.params if p is None else traj.params.with_p(p)
    vs = [virial_sample(st, params) for st, _ in traj.samples] if p is not None else traj.virial
    t = np.array([v.t for v in vs])
    m = np.array([v.m_p for v in vs])
    dm = np.gradient(m, t, edge_order=2)
    return [replace(v, dmdt_fd=float(d)) for v, d in zip(vs, dm)]
