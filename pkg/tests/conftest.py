import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fuplab import CantorSpec, make_cantor, make_random_porous


@pytest.fixture(scope="session")
def cantor6():
    return make_cantor(CantorSpec(3, (0, 2), 6))


@pytest.fixture(scope="session")
def cantor9():
    return make_cantor(CantorSpec(3, (0, 2), 9))


@pytest.fixture(scope="session")
def porous8():
    """The depth-8 seeded porous set used across the suite."""
    return make_random_porous(Fraction(1, 10), 8, 7)
