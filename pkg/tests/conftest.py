import numpy as np
import pytest

from gaussimage import (
    DiscreteMeasure,
    DualPolytope,
    build_grid,
    canonicalize,
    uniform_measure,
)

SQUARE_DIRECTIONS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


@pytest.fixture(scope="session")
def circle_grid():
    return build_grid(2, 100_000)

@pytest.fixture(scope="session")
def small_circle_grid():
    return build_grid(2, 20_000)


@pytest.fixture(scope="session")
def circle_uniform(circle_grid):
    return uniform_measure(circle_grid)


@pytest.fixture(scope="session")
def sphere_grid():
    return build_grid(3, 200_000, "fibonacci")


@pytest.fixture(scope="session")
def sphere_uniform(sphere_grid):
    return uniform_measure(sphere_grid)


@pytest.fixture(scope="session")
def square_dirs():
    return SQUARE_DIRECTIONS.copy()


@pytest.fixture(scope="session")
def square_measure(square_dirs):
    return DiscreteMeasure(square_dirs, np.full(4, np.pi / 2))


@pytest.fixture()
def square_polytope(square_dirs):
    return canonicalize(DualPolytope(square_dirs, np.ones(4)))
