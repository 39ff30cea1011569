import numpy as np
import pytest

from parakahler import kernels
from parakahler import surface2d as s2


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    # compile the numba kernels once so timed tests measure steady state
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def small_grid():
    return s2.Grid2D(nx=17, ny=17, x0=0.0, y0=0.0, hx=0.05, hy=0.05)


@pytest.fixture
def flat_surface(small_grid):
    return s2.flat_minlag_surface(small_grid)


@pytest.fixture
def liouville_surface_coarse():
    return s2.liouville_surface(s2.Grid2D.square(0.3, 0.02))


@pytest.fixture
def lagrangian_nonminimal(small_grid):
    return s2.homogeneous_lagrangian_surface(small_grid, s=0.6)


@pytest.fixture
def minimal_nonlagrangian(small_grid):
    return s2.synthetic_minimal_surface(small_grid, amplitude=0.3)
