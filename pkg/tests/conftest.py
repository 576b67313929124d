import numpy as np
import pytest

from specpart.fem import assemble_mass, assemble_stiffness
from specpart.mesh import build_disk_mesh, build_square_mesh


@pytest.fixture(scope="session")
def square8():
    return build_square_mesh(8)


@pytest.fixture(scope="session")
def square8_ops(square8):
    return assemble_stiffness(square8), assemble_mass(square8)


@pytest.fixture(scope="session")
def disk8():
    return build_disk_mesh(8)


@pytest.fixture(scope="session")
def disk8_ops(disk8):
    return assemble_stiffness(disk8), assemble_mass(disk8)


@pytest.fixture(scope="session")
def disk16():
    return build_disk_mesh(16)


@pytest.fixture(scope="session")
def disk16_ops(disk16):
    return assemble_stiffness(disk16), assemble_mass(disk16)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
