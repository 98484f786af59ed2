import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import random_monotone_U
from radialks.functionals import (
    bar_moment,
    check_estimate_chain,
    energy_E,
    kappa,
    moment_of_state,
    remainder_R,
    virial_rhs_identity,
    virial_sample,
)
from radialks.model import (
    ConcentratedBump,
    DiffusionLaw,
    Params,
    RadialGrid,
    RadialState,
    SmoothBump,
    Uniform,
    make_initial_data,
)


# -- kappa and the energy function ------------------------------------------


def test_kappa_two_dimensions():
    for p in (1.0, 1.5, 2.0, 7.0):
        assert kappa(p, 0.0, 2) == pytest.approx(2 / p, rel=1e-15)


def test_kappa_critical_three_dimensions():
    # (p-1)/((a+1)(p+a)) = 9/28, (2(n-1)/(p-1))^(a+1) = 4^(4/3), (np)^0 = 1
    assert kappa(2.0, 1 / 3, 3) == pytest.approx(9 / 28 * 4 ** (4 / 3), rel=1e-14)
    assert kappa(2.0, 1 / 3, 3) == pytest.approx(2.0409, abs=1e-4)


def test_kappa_linear_three_dimensions():
    assert kappa(2.0, 0.0, 3) == pytest.approx(0.5 * 4 * 6 ** (1 / 3), rel=1e-14)
    assert kappa(2.0, 0.0, 3) == pytest.approx(3.6342, abs=1e-4)


def test_kappa_alpha_zero_is_continuous_formula():
    # for alpha = 0 the general formula collapses to 2(n-1)(np)^((n-2)/n)/p
    for n in range(2, 7):
        for p in (1.3, 2.0, 5.0):
            general = (p - 1) / p * (2 * (n - 1) / (p - 1)) * (n * p) ** ((n - 2) / n)
            assert kappa(p, 0.0, n) == pytest.approx(general, rel=1e-13)


@pytest.mark.parametrize("bad", [(2.0, 0.5, 3), (0.9, 0.0, 2), (1.0, 0.2, 3), (2.0, 0.0, 1)])
def test_kappa_rejects_invalid(bad):
    with pytest.raises(ValueError):
        kappa(*bad)


@pytest.mark.parametrize("p", [1.1, 1.5, 2.0, 3.0])
@pytest.mark.parametrize(
    "law", [DiffusionLaw.power_law(0, 1, 0), DiffusionLaw.power_law(1, 0, 0)], ids=["c2", "c1"]
)
def test_two_dimensional_threshold_sign(p, law):
    Mc = 4 * (p + 1)
    assert energy_E(0.0, Params(2, Mc + 1e-6, law, p)) < 0
    assert energy_E(0.0, Params(2, Mc - 1e-6, law, p)) > 0


def test_energy_at_zero_in_higher_dimension():
    law = DiffusionLaw.power_law(2.0, 3.0, 0.1)
    for n in (3, 4, 6):
        params = Params(n, 5.0, law, 2.5)
        assert energy_E(0.0, params) == pytest.approx(-((5.0 / n) ** 3.5) / (2.5 * 3.5), rel=1e-14)


def test_energy_rejects_negative_argument():
    with pytest.raises(ValueError):
        energy_E(-1e-9, Params(2, 1.0, DiffusionLaw.constant(), 2.0))


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(2, 6),
    frac=st.floats(0, 1),
    p=st.floats(1.01, 10),
    c1=st.floats(0, 5),
    c2=st.floats(0.01, 5),
    M=st.floats(0.01, 100),
)
def test_energy_strictly_increasing(n, frac, p, c1, c2, M):
    law = DiffusionLaw.power_law(c1, c2, frac * (n - 2) / n)
    params = Params(n, M, law, p)
    top = 10 * (M / n) ** p
    z = np.geomspace(1e-9 * top, top, 200)
    E = energy_E(z, params)
    assert np.all(np.diff(E) >= 0)
    assert E[-1] > E[0]
    # increments at the scale of z itself are resolved strictly
    assert np.all(energy_E(1.01 * z, params) > E)
    assert energy_E(0.0, params) <= E[0]


# -- moments ------------------------------------------------------------------


def _nested_moment(u, n, p):
    """Oracle: (1/p) int_0^1 (int_r^1 u(rho) rho^(n-1) drho)^p r^(n-1) dr."""

    def tail(r):
        return quad(lambda x: u(x) * x ** (n - 1), r, 1, epsabs=1e-14, epsrel=1e-13)[0]

    return quad(lambda r: tail(r) ** p * r ** (n - 1), 0, 1, epsabs=1e-14, epsrel=1e-12)[0] / p


def test_bar_moment_zero_profile(uniform_grid):
    assert bar_moment(np.zeros(uniform_grid.nodes.size), 2.0, uniform_grid, 2) == 0.0


def test_bar_moment_uniform_example():
    grid = RadialGrid.uniform(256)
    u = np.full(grid.nodes.size, 2.0)
    val = bar_moment(u, 2.0, grid, 2)
    assert val == pytest.approx(1 / 12, rel=1e-12)
    assert val == pytest.approx(_nested_moment(lambda r: 2.0, 2, 2.0), rel=1e-10)


@pytest.mark.parametrize("n, p", [(2, 2.0), (3, 1.5), (4, 3.0)])
def test_moment_of_state_matches_nested_quadrature(n, p):
    grid = RadialGrid.uniform(256)
    M = 3.0
    st0 = make_initial_data(SmoothBump(0.6), M, n, grid)
    # continuous density of the smooth bump, normalised to mean M
    C = M / n / quad(lambda x: (1 - (x / 0.6) ** 2) ** 2 * x ** (n - 1), 0, 0.6)[0]
    u = lambda r: C * (1 - (r / 0.6) ** 2) ** 2 if r < 0.6 else 0.0
    oracle = _nested_moment(u, n, p)
    assert moment_of_state(st0, p, M) == pytest.approx(oracle, rel=5 * grid.h_max**2 / 0.36)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_bar_moment_concentrated_bump_converges(n, p):
    M, delta = 8.0, 0.25
    exact = (M / n) ** p * delta**n / (n * (p + 1)) / p
    errs = []
    for J in (200, 400, 800):
        grid = RadialGrid.uniform(J)
        r = grid.nodes
        u = np.where(r <= delta, M * delta**-n, 0.0)
        errs.append(abs(bar_moment(u, p, grid, n) - exact) / exact)
    assert errs[-1] < 5e-2
    assert errs[0] / errs[-1] > 3.0  # first order at least (jump in the data)


def test_bar_moment_matches_state_moment_for_generated_data():
    grid = RadialGrid.graded(512)
    for shape in (Uniform(), ConcentratedBump(0.1), SmoothBump(0.5)):
        st0 = make_initial_data(shape, 16.0, 2, grid)
        a = bar_moment(st0.u, 2.0, grid, 2)
        b = moment_of_state(st0, 2.0, 16.0)
        assert a == pytest.approx(b, rel=1e-3)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 6), M=st.floats(0.01, 50), p=st.floats(1.0, 8), seed=st.integers(0, 2**31))
def test_moment_bounds(n, M, p, seed):
    rng = np.random.default_rng(seed)
    grid = RadialGrid.uniform(64)
    state = RadialState(0.0, grid, n, random_monotone_U(rng, 64, M / n, sparsity=0.3))
    m = moment_of_state(state, p, M)
    assert 0 <= m <= (M / n) ** p / (p * n) * (1 + 1e-12)


def test_moment_of_concentrating_state_vanishes():
    # all mass in the innermost cell: m_p <= (M/n)^p s_1 / p -> 0
    M, n, p = 4.0, 2, 2.0
    prev = math.inf
    for J in (32, 128, 512):
        grid = RadialGrid.graded(J, 0.9)
        U = np.full(J + 1, M / n)
        U[0] = 0.0
        m = moment_of_state(RadialState(0.0, grid, n, U), p, M)
        bound = (M / n) ** p * grid.s(n)[1] / p
        assert m <= bound * (1 + 1e-12)
        assert m < prev
        prev = m


# -- remainder and identity --------------------------------------------------


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("n, p", [(2, 2.0), (3, 2.0), (2, 3.5), (5, 1.5)])
def test_remainder_uniform_matches_quadrature(n, p):
    M = 3.0
    grid = RadialGrid.uniform(64)
    state = make_initial_data(Uniform(), M, n, grid)
    law = DiffusionLaw.constant()

    def integrand(r):
        W = M / n - M * r**n / n
        return r ** (2 * n - 3) * W ** (p - 2) * (2 * (n - 1) * W - (p - 1) * r**n * M) * M

    oracle, _ = quad(integrand, 0, 1, epsabs=1e-14, epsrel=1e-13)
    assert remainder_R(state, p, M, law) == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_identity_vanishes_for_stationary_uniform_state(n, p):
    # u = M, a = 1 is an equilibrium, so dm_p/dt = 0
    M = 5.0
    state = make_initial_data(Uniform(), M, n, RadialGrid.uniform(32))
    law = DiffusionLaw.constant()
    val = virial_rhs_identity(state, p, M, law)
    scale = (M / n) ** (p + 1)
    assert abs(val) <= 1e-12 * scale


def test_remainder_of_zero_state():
    grid = RadialGrid.uniform(32)
    state = RadialState(0.0, grid, 3, np.zeros(33))
    assert remainder_R(state, 2.0, 0.0, DiffusionLaw.constant()) == 0.0
    assert remainder_R(state, 1.5, 0.0, DiffusionLaw.porous_medium(4 / 3)) == 0.0


def test_virial_sample_composition():
    grid = RadialGrid.uniform(64)
    params = Params(2, 16.0, DiffusionLaw.constant(), 2.0)
    st0 = make_initial_data(ConcentratedBump(0.3), 16.0, 2, grid)
    v = virial_sample(st0, params)
    assert v.m_p == pytest.approx(moment_of_state(st0, 2.0, 16.0), rel=1e-14)
    assert v.rhs_identity == pytest.approx(v.m_p * 16 - 8**3 / 6 + v.R_p, rel=1e-13)
    assert v.rhs_inequality == pytest.approx(float(energy_E(v.m_p, params)), rel=1e-14)
    assert v.residual is None and v.slack is None


# -- estimate chain ----------------------------------------------------------


def test_chain_on_zero_state():
    grid = RadialGrid.uniform(32)
    state = RadialState(0.0, grid, 3, np.zeros(33))
    rep = check_estimate_chain(state, 2.0, 0.0, DiffusionLaw.power_law(1, 1, 1 / 3))
    assert rep.ok()
    assert all(m >= 0 for m in rep.margins.values())


def test_chain_reports_every_step():
    grid = RadialGrid.uniform(64)
    state = make_initial_data(SmoothBump(0.4), 6.0, 3, grid)
    rep = check_estimate_chain(state, 2.0, 6.0, DiffusionLaw.power_law(1, 1, 0.2))
    expected = {
        "bracket_pointwise",
        "bracket_integrated",
        "jensen_c1",
        "parts_c1",
        "moment_c1",
        "jensen_c2",
        "parts_c2",
        "moment_c2",
        "remainder_bound",
        "energy_bound",
    }
    assert set(rep.margins) == expected
    assert rep.ok()


def test_chain_detects_a_broken_bound():
    # a law whose true diffusion exceeds the claimed bound must show a violation
    grid = RadialGrid.uniform(64)
    state = make_initial_data(SmoothBump(0.4), 6.0, 3, grid)
    honest = DiffusionLaw.porous_medium(4 / 3)
    cheat = DiffusionLaw.power_law(honest.c1 * 0.25, 0.0, honest.alpha)
    rep = check_estimate_chain(state, 2.0, 6.0, cheat)
    assert rep.ok()  # law and bound coincide for the cheat, chain still valid
    # now make the state carry the honest law's flux but the cheat's bound
    R_true = remainder_R(state, 2.0, 6.0, honest)
    bound_cheat = rep.rhs["remainder_bound"]
    assert R_true > bound_cheat


def test_remainder_bound_is_energy_bound():
    grid = RadialGrid.uniform(128)
    M, n, p = 9.0, 3, 2.5
    law = DiffusionLaw.power_law(1.5, 0.7, 0.25)
    state = make_initial_data(ConcentratedBump(0.5), M, n, grid)
    rep = check_estimate_chain(state, p, M, law)
    m = moment_of_state(state, p, M)
    E = float(energy_E(m, Params(n, M, law, p)))
    assert rep.rhs["energy_bound"] == pytest.approx(E - M * m + (M / n) ** (p + 1) / (p * (p + 1)), rel=1e-10)
    assert rep.rhs["remainder_bound"] == pytest.approx(rep.rhs["energy_bound"], rel=1e-10)


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(2, 6),
    frac=st.one_of(st.just(1.0), st.just(0.0), st.floats(0, 1)),
    p=st.floats(2, 6),
    c1=st.floats(0.01, 5),
    c2=st.floats(0, 5),
    M=st.floats(0.01, 20),
    J=st.integers(16, 120),
    graded=st.booleans(),
    seed=st.integers(0, 2**31),
)
def test_chain_margins_nonnegative(n, frac, p, c1, c2, M, J, graded, seed):
    rng = np.random.default_rng(seed)
    grid = RadialGrid.graded(J, 0.95) if graded else RadialGrid.uniform(J)
    law = DiffusionLaw.power_law(c1, c2, frac * (n - 2) / n)
    state = RadialState(0.0, grid, n, random_monotone_U(rng, J, M / n, sparsity=0.2))
    rep = check_estimate_chain(state, p, M, law)
    assert rep.ok(1e-9), rep.violations(1e-9)
