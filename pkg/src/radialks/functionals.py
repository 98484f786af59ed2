"""Moment functionals, the energy function and the virial estimate chain.

All radial integrals of a state are taken over its piecewise-linear mass
function in the volume variable ``s = r**n/n`` (see
:class:`radialks.quadrature.ShellQuadrature`).  In that variable

    r**(n-1) dr = ds,    r**n = n s,    dU = u ds,

which turns every integrand below into a function of ``(s, W)`` with
``W = M/n - U``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import DiffusionLaw, Params, RadialGrid, RadialState, mass_from_density
from .quadrature import ShellQuadrature

__all__ = [
    "VirialSample",
    "ChainReport",
    "kappa",
    "energy_E",
    "bar_moment",
    "moment_of_state",
    "remainder_R",
    "virial_rhs_identity",
    "virial_sample",
    "check_estimate_chain",
]

# lower clamp for W before negative powers (p < 2)
_W_FLOOR = 1e-30


def _powz(z, e):
    """``z**e`` with ``0**0 = 1``."""
    return np.power(z, e)


def kappa(p: float, alpha: float, n: int) -> float:
    """Constant multiplying the ``c1`` term of the energy function.

    Defined for ``p > 1``; for ``alpha = 0`` the removable singularity at
    ``p = 1`` is filled by ``2(n-1) (n p)**((n-2)/n) / p``.
    """
    if n < 2 or int(n) != n:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    if alpha < 0 or alpha > (n - 2) / n:
        raise ValueError(f"alpha={alpha} outside [0, (n-2)/n]")
    if p < 1 or (p == 1 and alpha != 0):
        raise ValueError(f"p={p} requires p > 1 (p = 1 only when alpha = 0)")
    theta = (n - 2 - alpha * n) / n
    if alpha == 0:
        return 2 * (n - 1) * (n * p) ** theta / p
    return (
        (p - 1)
        / ((alpha + 1) * (p + alpha))
        * (2 * (n - 1) / (p - 1)) ** (alpha + 1)
        * (n * p) ** theta
    )


def energy_E(z, params: Params):
    """Energy function whose sign at ``m_p(0)`` decides the blow-up criterion.

    Vectorised in ``z``.  Strictly increasing on ``(0, inf)``.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("energy function is defined for z >= 0 only")
    n, M, p = params.n, params.M, params.p
    law = params.diffusion
    alpha = law.alpha
    mass = M / n
    out = M * z - mass ** (p + 1) / (p * (p + 1))
    if law.c1 != 0:
        out = out + (
            law.c1
            * kappa(p, alpha, n)
            * mass ** ((2 * p + n * alpha * (p + 1)) / n)
            * _powz(z, (n - 2 - alpha * n) / n)
        )
    if law.c2 != 0:
        out = out + law.c2 * kappa(p, 0.0, n) * mass ** (2 * p / n) * _powz(z, (n - 2) / n)
    return out[()] if out.ndim == 0 else out


def _shells(U, grid: RadialGrid, n: int, M: float) -> ShellQuadrature:
    return ShellQuadrature(grid.s(n), M / n - np.asarray(U, dtype=float))


def bar_moment(u0, p: float, grid: RadialGrid, n: int) -> float:
    """Moment of a density profile: inner tail mass by trapezoid, outer exact."""
    U = mass_from_density(u0, grid, n)
    total = U[-1]
    q = _shells(U, grid, n, n * total)
    return q.integrate(q.W**p) / p


def moment_of_state(state: RadialState, p: float, M: float) -> float:
    q = _shells(state.U, state.grid, state.n, M)
    return q.integrate(q.W**p) / p


def _remainder(q: ShellQuadrature, n: int, p: float, law: DiffusionLaw):
    W = q.W
    Au = law.A(q.u)
    if p >= 2:
        bracket = W ** (p - 2) * (2 * (n - 1) * W - (p - 1) * n * q.s * q.u)
    else:
        Wc = np.maximum(W, _W_FLOOR)
        bracket = 2 * (n - 1) * Wc ** (p - 1) - (p - 1) * n * q.s * q.u * Wc ** (p - 2)
        bracket = np.where(Au == 0, 0.0, bracket)
    return _powz(n * q.s, (n - 2) / n) * bracket * Au


def remainder_R(state: RadialState, p: float, M: float, law: DiffusionLaw) -> float:
    """Remainder of the virial identity.

    The ``r**(2n-3) dr`` weight becomes ``(n s)**((n-2)/n) ds`` and ``r**n u``
    becomes ``n s u``.  For ``p < 2`` the integrand is regrouped and ``W`` is
    clamped below at 1e-30 before the negative power.
    """
    q = _shells(state.U, state.grid, state.n, M)
    return q.integrate(_remainder(q, state.n, p, law))


def virial_rhs_identity(state: RadialState, p: float, M: float, law: DiffusionLaw) -> float:
    n = state.n
    m = moment_of_state(state, p, M)
    return M * m - (M / n) ** (p + 1) / (p * (p + 1)) + remainder_R(state, p, M, law)


@dataclass(frozen=True)
class VirialSample:
    t: float
    m_p: float
    R_p: float
    rhs_identity: float
    rhs_inequality: float
    dmdt_fd: Optional[float] = None

    @property
    def residual(self) -> Optional[float]:
        if self.dmdt_fd is None:
            return None
        return abs(self.dmdt_fd - self.rhs_identity)

    @property
    def slack(self) -> Optional[float]:
        if self.dmdt_fd is None:
            return None
        return self.rhs_inequality - self.dmdt_fd


def virial_sample(state: RadialState, params: Params) -> VirialSample:
    n, M, p = params.n, params.M, params.p
    q = _shells(state.U, state.grid, n, M)
    m = q.integrate(q.W**p) / p
    R = q.integrate(_remainder(q, n, p, params.diffusion))
    rhs = M * m - (M / n) ** (p + 1) / (p * (p + 1)) + R
    return VirialSample(state.t, m, R, rhs, float(energy_E(m, params)))


# ---------------------------------------------------------------------------
# estimate chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainReport:
    """Left/right sides of every inequality in the remainder estimate.

    ``margins`` maps step names to ``rhs - lhs``; ``scales`` to
    ``max(1, |lhs|, |rhs|)``.  A step is violated when its margin falls
    below ``-tol * scale``.
    """

    lhs: dict = field(default_factory=dict)
    rhs: dict = field(default_factory=dict)

    @property
    def margins(self) -> dict:
        return {k: self.rhs[k] - self.lhs[k] for k in self.lhs}

    @property
    def scales(self) -> dict:
        return {k: max(1.0, abs(self.lhs[k]), abs(self.rhs[k])) for k in self.lhs}

    def violations(self, tol: float = 1e-9) -> dict:
        sc = self.scales
        return {k: m for k, m in self.margins.items() if m < -tol * sc[k]}

    def ok(self, tol: float = 1e-9) -> bool:
        return not self.violations(tol)

    def worst(self) -> float:
        sc = self.scales
        return min(m / sc[k] for k, m in self.margins.items())


def _jensen_chain(q, n, p, a, mass, m_p, K, tag, lhs, rhs):
    """Jensen, integration-by-parts and moment steps for one growth exponent.

    ``a`` is the exponent in the diffusion bound (``alpha`` for the c1 branch,
    0 for the c2 branch); ``K`` the coefficient in front of the integral.
    """
    theta = (n - 2 - a * n) / n
    qq = p + a
    W, s, u = q.W, q.s, q.u
    dmu = W ** (qq - 1) * u  # (M/n - U)**(p+a-1) dU/ds
    Z = mass**qq / qq
    I = q.integrate(_powz(n * s, theta) * dmu)
    X = q.integrate(n * s * dmu)
    Y = q.integrate(W**qq)
    jensen = Z ** ((2 + a * n) / n) * _powz(X, theta)
    ibp = Z ** ((2 + a * n) / n) * _powz(n / qq * Y, theta)
    final = (n * p) ** theta / qq * mass ** ((2 * p + a * n * (p + 1)) / n) * _powz(m_p, theta)
    lhs[f"jensen_{tag}"], rhs[f"jensen_{tag}"] = I, jensen
    lhs[f"parts_{tag}"], rhs[f"parts_{tag}"] = jensen, ibp
    lhs[f"moment_{tag}"], rhs[f"moment_{tag}"] = ibp, final
    return K * I, K * final


def check_estimate_chain(state: RadialState, p: float, M: float, law: DiffusionLaw) -> ChainReport:
    """Evaluate both sides of every step bounding the remainder by the energy.

    Steps, in order:

    * ``bracket_pointwise`` -- ``[2(n-1)W - (p-1) r^n u] A(u)`` against its
      bound, minimum slack over all quadrature points (reported as lhs 0,
      rhs = that minimum);
    * ``bracket_integrated`` -- ``R_p`` against the sum of the two weighted
      integrals of ``dU``;
    * ``jensen_*``, ``parts_*``, ``moment_*`` -- the concavity step, the
      integration by parts and the ``W**(p+a) <= (M/n)**a W**p`` step, for the
      ``c1`` branch (``a = alpha``) and the ``c2`` branch (``a = 0``);
    * ``remainder_bound`` -- ``R_p <= E(m_p) - M m_p + (M/n)**(p+1)/(p(p+1))``.

    Negative margins are reported, never raised.
    """
    n = state.n
    alpha, c1, c2 = law.alpha, law.c1, law.c2
    mass = M / n
    q = _shells(state.U, state.grid, n, M)
    W, s, u = q.W, q.s, q.u
    lhs: dict = {}
    rhs: dict = {}

    K1 = c1 * (p - 1) / (1 + alpha) * (2 * (n - 1) / (p - 1)) ** (1 + alpha) if c1 else 0.0
    K2 = 2 * (n - 1) * c2

    # pointwise: B A(u) <= K1 W^(1+a) r^(-n a) u + K2 W u, r^n = n s
    B = 2 * (n - 1) * W - (p - 1) * n * s * u
    pw_l = B * law.A(u)
    with np.errstate(divide="ignore"):
        pw_r = K1 * W ** (1 + alpha) * _powz(n * s, -alpha) * u + K2 * W * u
    slack = pw_r - pw_l
    scale = np.maximum(1.0, np.maximum(np.abs(pw_l), np.abs(pw_r)))
    k = int(np.argmin(np.where(np.isfinite(slack), slack / scale, np.inf)))
    lhs["bracket_pointwise"], rhs["bracket_pointwise"] = float(pw_l[k]), float(pw_r[k])

    R = q.integrate(_remainder(q, n, p, law))
    m_p = q.integrate(W**p) / p

    # integrated bracket: weights (n s)^((n-2)/n) W^(p-2) applied to both sides
    I1_bound, I2_bound = 0.0, 0.0
    I1 = q.integrate(_powz(n * s, (n - 2 - alpha * n) / n) * W ** (p + alpha - 1) * u)
    I2 = q.integrate(_powz(n * s, (n - 2) / n) * W ** (p - 1) * u)
    lhs["bracket_integrated"], rhs["bracket_integrated"] = R, K1 * I1 + K2 * I2

    if c1:
        _, I1_bound = _jensen_chain(q, n, p, alpha, mass, m_p, K1, "c1", lhs, rhs)
    if c2:
        _, I2_bound = _jensen_chain(q, n, p, 0.0, mass, m_p, K2, "c2", lhs, rhs)

    bound = I1_bound + I2_bound
    lhs["remainder_bound"] = R
    rhs["remainder_bound"] = bound
    # the same bound expressed through the energy function
    params_free = M * m_p - mass ** (p + 1) / (p * (p + 1))
    e = 0.0
    if c1:
        e += c1 * kappa(p, alpha, n) * mass ** ((2 * p + n * alpha * (p + 1)) / n) * _powz(
            m_p, (n - 2 - alpha * n) / n
        )
    if c2:
        e += c2 * kappa(p, 0.0, n) * mass ** (2 * p / n) * _powz(m_p, (n - 2) / n)
    lhs["energy_bound"] = R
    rhs["energy_bound"] = (e + params_free) - M * m_p + mass ** (p + 1) / (p * (p + 1))
    return ChainReport(lhs, rhs)
