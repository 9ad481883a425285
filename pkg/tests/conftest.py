from pathlib import Path

import pytest

from fairvrp import fig1_instance, load_instance
from fairvrp.tsp import TspOracle

DATA = Path(__file__).parent / "data"

# minimum total distance of the two-vehicle example (routes 1-2-3 and 4-5-6-7)
FIG1_MINDIST = 2820.079327450496


@pytest.fixture
def fig1():
    """Two-vehicle example with its budget already resolved."""
    return fig1_instance(budget=1.05 * FIG1_MINDIST)


@pytest.fixture
def fig1_file():
    return DATA / "fig1.inst"


@pytest.fixture
def oracle(fig1):
    return TspOracle(fig1)
