import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import settings

from h3ci.geometry import MolecularGeometry
from h3ci.hamiltonian import molecular_hamiltonian

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

SQRT3 = math.sqrt(3.0)


@lru_cache(maxsize=None)
def hamiltonian_at(R, rho, theta):
    return molecular_hamiltonian(MolecularGeometry(R, rho, theta))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def ci_geometry():
    return MolecularGeometry(1.0, SQRT3, 0.5 * math.pi)


@pytest.fixture(scope="session")
def sample_geometries():
    """A C2v, a Cs and a stretched Cs geometry."""
    return [
        MolecularGeometry(1.0, 1.5, 0.5 * math.pi),
        MolecularGeometry(1.0, 1.5, 1.2),
        MolecularGeometry(1.3, 2.4, 2.2),
    ]


def random_state(rng, dim=8):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
