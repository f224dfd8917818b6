import numpy as np
import pytest

from pinewton import bounds, lattice, state


@pytest.fixture
def small_grid():
    return lattice.make_grid(6.0, 32)


@pytest.fixture
def grid():
    return lattice.make_grid(12.0, 64)


@pytest.fixture
def gaussian_state(grid):
    """phi = exp(-|x|^2), uncharged"""
    phi = lattice.Field.from_function(grid, lambda x, y: np.exp(-(x * x + y * y)))
    return state.assemble(phi, 0.0, 1.0)


@pytest.fixture
def charged_state(grid):
    """A complex Gaussian plus a charged Green part at lambda = 1"""
    phi = lattice.Field.from_function(
        grid, lambda x, y: (0.4 + 0.2j * x) * np.exp(-(x * x + y * y) / 2.0)
    )
    return state.assemble(phi, 0.7 - 0.3j, 1.0)


@pytest.fixture
def random_states(small_grid):
    """Three seeded states from the estimator's random family"""
    sequences = np.random.SeedSequence(7).spawn(3)
    return [bounds.random_state(small_grid, np.random.default_rng(s)) for s in sequences]
