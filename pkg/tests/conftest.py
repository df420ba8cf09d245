import numpy as np
import pytest

from heatns.dynamics import curl_of_stream
from heatns.mesh import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_stream(grid: Grid, rng) -> np.ndarray:
    """Random node stream function vanishing on the boundary."""
    psi = rng.standard_normal((grid.nx + 1, grid.ny + 1))
    psi[0] = psi[-1] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0
    return psi


def random_divfree(grid: Grid, rng, scale=1.0):
    return curl_of_stream(scale * random_stream(grid, rng), grid)
