import numpy as np
import pytest

from towerlab.tower import TowerSpec, bounded_tower, poly_tower


@pytest.fixture
def two_symbol_spec():
    # weights 1/2 each, roofs 1 and 2; mean roof 1.5, invariant mass 1/3 per state
    return bounded_tower([1, 2], [0.5, 0.5], xi=0.5)


@pytest.fixture
def unit_roof_spec():
    return bounded_tower([1, 1, 1], [0.5, 0.3, 0.2], xi=0.5)


@pytest.fixture
def poly3_spec():
    # cap 100 keeps the state space small enough to enumerate in tests
    return poly_tower(3.0, 100, xi=0.5)
