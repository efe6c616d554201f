import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from mesh.generators import annulus, crisscross_square, periodic_square, unit_square


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def square():
    return unit_square(6)


@pytest.fixture(scope="session")
def ring():
    return annulus(0.5, 1.5, 16, inner_tag="body", outer_tag="outer", inner_convention=-1)


@pytest.fixture(scope="session")
def torus():
    return periodic_square(8)


@pytest.fixture(scope="session")
def crisscross():
    return crisscross_square(3)


@pytest.fixture(scope="session")
def meshes(square, ring, crisscross):
    return [square, ring, crisscross]
