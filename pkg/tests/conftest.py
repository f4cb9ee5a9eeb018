import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from blowup.integrate import Tolerances
from blowup.model import derive_constants
from blowup import shoot


@pytest.fixture(scope="session")
def p7():
    return derive_constants(7)


@pytest.fixture(scope="session")
def tol():
    return Tolerances()


@pytest.fixture(scope="session")
def family(p7, tol):
    """Rows n = 1..13 of the p = 7 family; shared because the chain is the
    expensive part of the suite."""
    return shoot.spectrum(13, p7, tol)


@pytest.fixture(scope="session")
def u1(family):
    return family.rows[0]
