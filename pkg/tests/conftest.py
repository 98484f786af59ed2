import numpy as np
import pytest

from radialks.model import DiffusionLaw, RadialGrid


@pytest.fixture
def linear_law():
    return DiffusionLaw.constant()


@pytest.fixture(params=[64, 256], ids=lambda J: f"J{J}")
def uniform_grid(request):
    return RadialGrid.uniform(request.param)


def random_monotone_U(rng, J, mass, sparsity=0.0):
    """Random nondecreasing nodal mass function with U(0)=0, U(1)=mass."""
    inc = rng.dirichlet(np.full(J, rng.uniform(0.05, 3.0)))
    if sparsity:
        inc[rng.random(J) < sparsity] = 0.0
        if inc.sum() == 0:
            inc[-1] = 1.0
        inc /= inc.sum()
    U = np.concatenate([[0.0], np.cumsum(inc)]) * mass
    U[-1] = mass
    return np.maximum.accumulate(U)
