"""Domain types for the radial Smoluchowski-Poisson problem on the unit ball.

Radial profiles live on a grid ``0 = r_0 < ... < r_J = 1``.  The primary
unknown is the normalised mass function

    U(r) = int_0^r u(rho) rho**(n-1) drho,

so that ``U(0) = 0`` and ``U(1) = M/n`` when ``M`` is the mean of ``u``.
Writing ``s = r**n / n`` the density is simply ``u = dU/ds``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

__all__ = [
    "LawKind",
    "DiffusionLaw",
    "Params",
    "RadialGrid",
    "RadialState",
    "ChemoProfile",
    "Uniform",
    "ConcentratedBump",
    "SmoothBump",
    "eval_a",
    "eval_A",
    "mass_from_density",
    "density_from_mass",
    "recover_v",
    "make_initial_data",
    "porous_medium_certificate",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_nonneg(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise ValueError("diffusion law evaluated at a negative density")
    return z


# ---------------------------------------------------------------------------
# diffusion laws
# ---------------------------------------------------------------------------


class LawKind(str, enum.Enum):
    CONSTANT = "constant"
    POWER_LAW = "power_law"
    POROUS_MEDIUM = "porous_medium"


def porous_medium_certificate(m, n: int) -> tuple[Fraction, Fraction, Fraction]:
    """Return ``(c1, c2, alpha)`` with ``m z**(m-1) <= c1 z**alpha + c2``.

    ``m`` is converted to an exact fraction so that the admissibility test
    ``alpha <= (n-2)/n`` is decided without rounding.  For ``m`` in
    ``[1, 2(n-1)/n]`` the choice ``c1 = m, c2 = 0, alpha = m - 1`` is an
    equality, hence the tightest possible certificate.
    """
    mf = Fraction(m).limit_denominator(10**6) if not isinstance(m, Fraction) else m
    if mf < 1:
        raise ValueError(f"porous medium exponent must be >= 1, got {m}")
    alpha = mf - 1
    if alpha > Fraction(n - 2, n):
        raise ValueError(
            f"exponent m={mf} gives alpha={alpha} > (n-2)/n={Fraction(n - 2, n)}"
        )
    return mf, Fraction(0), alpha


@dataclass(frozen=True)
class DiffusionLaw:
    """Diffusion coefficient ``a(z)`` together with its growth certificate.

    The certificate ``(c1, c2, alpha)`` asserts ``a(z) <= c1 z**alpha + c2``.
    Use the ``constant``, ``power_law`` and ``porous_medium`` constructors.
    """

    kind: LawKind
    c1: float
    c2: float
    alpha: float
    m: float = 1.0

    @classmethod
    def constant(cls) -> "DiffusionLaw":
        return cls(LawKind.CONSTANT, 0.0, 1.0, 0.0)

    @classmethod
    def power_law(cls, c1: float, c2: float, alpha: float) -> "DiffusionLaw":
        if c1 < 0 or c2 < 0 or alpha < 0:
            raise ValueError("power law needs c1, c2, alpha >= 0")
        if c1 == 0 and c2 == 0:
            raise ValueError("power law with c1 = c2 = 0 is not a diffusion")
        return cls(LawKind.POWER_LAW, float(c1), float(c2), float(alpha))

    @classmethod
    def porous_medium(cls, m, n: int | None = None) -> "DiffusionLaw":
        if n is None:
            mf = Fraction(m).limit_denominator(10**6)
            if mf < 1:
                raise ValueError(f"porous medium exponent must be >= 1, got {m}")
            c1, c2, alpha = mf, Fraction(0), mf - 1
        else:
            c1, c2, alpha = porous_medium_certificate(m, n)
        return cls(LawKind.POROUS_MEDIUM, float(c1), float(c2), float(alpha), float(m))

    def a(self, z):
        return eval_a(self, z)

    def A(self, z):
        return eval_A(self, z)

    def secant(self, z):
        """``A(z)/z`` with the limit ``a(0)`` at ``z = 0``."""
        z = _check_nonneg(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(z > 0, eval_A(self, z) / np.where(z > 0, z, 1.0), eval_a(self, 0.0))
        return out

    def bound(self, z):
        """Right-hand side ``c1 z**alpha + c2`` of the growth certificate."""
        z = _check_nonneg(z)
        return self.c1 * np.power(z, self.alpha) + self.c2

    def A_bound(self, z):
        """``c1 z**(1+alpha)/(1+alpha) + c2 z``, the integrated certificate."""
        z = _check_nonneg(z)
        return self.c1 * np.power(z, 1.0 + self.alpha) / (1.0 + self.alpha) + self.c2 * z

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "c1": self.c1,
            "c2": self.c2,
            "alpha": self.alpha,
            "m": self.m,
        }


def eval_a(law: DiffusionLaw, z):
    """Diffusion coefficient ``a(z)``; raises ``ValueError`` for ``z < 0``."""
    z = _check_nonneg(z)
    if law.kind is LawKind.CONSTANT:
        out = np.ones_like(z)
    elif law.kind is LawKind.POWER_LAW:
        out = law.c1 * np.power(z, law.alpha) + law.c2
    else:
        out = law.m * np.power(z, law.m - 1.0)
    return out[()] if out.ndim == 0 else out


def eval_A(law: DiffusionLaw, z):
    """Antiderivative ``A(z) = int_0^z a``, in closed form."""
    z = _check_nonneg(z)
    if law.kind is LawKind.CONSTANT:
        out = z.copy()
    elif law.kind is LawKind.POWER_LAW:
        out = law.c1 * np.power(z, 1.0 + law.alpha) / (1.0 + law.alpha) + law.c2 * z
    else:
        out = np.power(z, law.m)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# parameters, grids, states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Params:
    n: int
    M: float
    diffusion: DiffusionLaw
    p: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if not self.M > 0:
            raise ValueError(f"mean mass must be positive, got {self.M}")
        alpha = self.diffusion.alpha
        if alpha < 0 or alpha > (self.n - 2) / self.n:
            raise ValueError(
                f"certificate exponent alpha={alpha} outside [0, (n-2)/n] for n={self.n}"
            )
        if not (self.p > 1 or (self.p == 1 and alpha == 0)):
            raise ValueError(f"moment order p={self.p} needs p > 1 (p = 1 only if alpha = 0)")

    @property
    def mass(self) -> float:
        """``M/n``, the value of the mass function at ``r = 1``."""
        return self.M / self.n

    def with_M(self, M: float) -> "Params":
        return Params(self.n, M, self.diffusion, self.p)

    def with_p(self, p: float) -> "Params":
        return Params(self.n, self.M, self.diffusion, p)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    nodes: np.ndarray

    def __post_init__(self):
        r = _frozen(self.nodes)
        if r.ndim != 1 or r.size < 17:
            raise ValueError("grid needs at least J = 16 intervals")
        if r[0] != 0.0 or r[-1] != 1.0:
            raise ValueError("grid endpoints must be exactly 0 and 1")
        if np.any(np.diff(r) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", r)

    @classmethod
    def uniform(cls, J: int = 512) -> "RadialGrid":
        r = np.linspace(0.0, 1.0, J + 1)
        r[-1] = 1.0
        return cls(r)

    @classmethod
    def graded(cls, J: int = 512, ratio: float = 0.98) -> "RadialGrid":
        """Geometric grid refined towards ``r = 0``: ``h_j / h_{j+1} = ratio``."""
        if not 0 < ratio <= 1:
            raise ValueError("grading ratio must lie in (0, 1]")
        h = ratio ** np.arange(J - 1, -1, -1, dtype=float)
        r = np.concatenate([[0.0], np.cumsum(h)])
        r /= r[-1]
        r[-1] = 1.0
        return cls(r)

    @property
    def J(self) -> int:
        return self.nodes.size - 1

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h_max(self) -> float:
        return float(np.max(np.diff(self.nodes)))

    def s(self, n: int) -> np.ndarray:
        """Volume coordinate ``s = r**n / n``."""
        return self.nodes**n / n

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash(self.nodes.tobytes())


@dataclass(frozen=True, eq=False)
class RadialState:
    """Mass function ``U`` (and derived density ``u``) at time ``t``."""

    t: float
    grid: RadialGrid
    n: int
    U: np.ndarray
    u: np.ndarray = field(default=None)

    def __post_init__(self):
        U = _frozen(self.U)
        if U.shape != self.grid.nodes.shape:
            raise ValueError("U must have one value per grid node")
        if U[0] != 0.0:
            raise ValueError("mass function must vanish at r = 0")
        if np.any(np.diff(U) < 0):
            raise ValueError("mass function must be nondecreasing")
        object.__setattr__(self, "U", U)
        u = density_from_mass(U, self.grid, self.n) if self.u is None else self.u
        object.__setattr__(self, "u", _frozen(u))

    @property
    def M(self) -> float:
        return self.n * float(self.U[-1])

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def cell_density(self) -> np.ndarray:
        """Shell-averaged density on each cell ``[r_j, r_{j+1}]``."""
        return np.diff(self.U) / np.diff(self.grid.s(self.n))


@dataclass(frozen=True, eq=False)
class ChemoProfile:
    grid: RadialGrid
    v: np.ndarray
    dv: np.ndarray


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def mass_from_density(u, grid: RadialGrid, n: int) -> np.ndarray:
    """Cumulative trapezoid of ``u(rho) rho**(n-1)`` from 0 to every node."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("density must be nonnegative")
    r = grid.nodes
    f = u * r ** (n - 1)
    U = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(r))])
    return U


def density_from_mass(U, grid: RadialGrid, n: int) -> np.ndarray:
    """Invert :func:`mass_from_density`: ``u = dU/ds`` with ``s = r**n/n``.

    Centered differences in ``s`` at interior nodes (exact for uniform
    density), one-sided at both ends.  At ``r = 0`` this is the regular limit
    ``n U(r_1) / r_1**n``.
    """
    U = np.asarray(U, dtype=float)
    dU = np.diff(U)
    if np.any(dU < 0):
        raise ValueError("mass function must be nondecreasing")
    s = grid.s(n)
    u = np.empty_like(U)
    u[1:-1] = (U[2:] - U[:-2]) / (s[2:] - s[:-2])
    u[0] = dU[0] / (s[1] - s[0])
    u[-1] = dU[-1] / (s[-1] - s[-2])
    return u


def recover_v(state: RadialState, M: float) -> ChemoProfile:
    """Chemoattractant with zero weighted mean from the radial Poisson problem."""
    n = state.n
    r = state.grid.nodes
    dv = np.zeros_like(r)
    dv[1:] = M * r[1:] / n - state.U[1:] / r[1:] ** (n - 1)
    dv[-1] = M / n - state.U[-1]  # exactly zero once U(1) = M/n
    v = np.concatenate([[0.0], np.cumsum(0.5 * (dv[1:] + dv[:-1]) * np.diff(r))])
    w = r ** (n - 1)
    mean = np.trapezoid(v * w, r) / np.trapezoid(w, r)
    return ChemoProfile(state.grid, _frozen(v - mean), _frozen(dv))


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    def cumulative(self, r, n):
        return r**n / n

    def to_dict(self):
        return {"kind": "uniform"}


@dataclass(frozen=True)
class ConcentratedBump:
    """Indicator of ``B(0, delta)`` (scaled to mean ``M``)."""

    delta: float

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError(f"bump radius must lie in (0, 1], got {self.delta}")

    def cumulative(self, r, n):
        return np.minimum(r, self.delta) ** n / n

    def to_dict(self):
        return {"kind": "concentrated", "delta": self.delta}


@dataclass(frozen=True)
class SmoothBump:
    """``(1 - (r/delta)**2)**2`` on ``[0, delta]``, zero beyond."""

    delta: float

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError(f"bump radius must lie in (0, 1], got {self.delta}")

    def cumulative(self, r, n):
        x = np.minimum(r, self.delta)
        d2 = self.delta**2
        return x**n / n - 2 * x ** (n + 2) / ((n + 2) * d2) + x ** (n + 4) / ((n + 4) * d2 * d2)

    def to_dict(self):
        return {"kind": "smooth", "delta": self.delta}


Shape = Union[Uniform, ConcentratedBump, SmoothBump]


def make_initial_data(shape: Shape, M: float, n: int, grid: RadialGrid) -> RadialState:
    """Project ``shape`` onto the grid by exact shell masses, normalised to mean ``M``.

    The cumulative shell mass is known in closed form for every shape, so the
    nodal mass function is exact; the final rescaling pins ``U(1) = M/n``.
    """
    F = shape.cumulative(grid.nodes, n)
    U = (M / n) * (F / F[-1])
    U[0] = 0.0
    U[-1] = M / n
    U = np.maximum.accumulate(U)
    return RadialState(0.0, grid, n, U)
