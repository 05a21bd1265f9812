"""Shared fixtures: small meshes and material data sized for fast tests."""
import numpy as np
import pytest

from viscontact.fem import MaterialParams, build_dofmap, contact_quadrature
from viscontact.mesh import build_uniform


@pytest.fixture(scope="session")
def params():
    return MaterialParams(phi=2.0, xi=2.0, eta=4.0, lam=4.0, T=1.0)


@pytest.fixture(scope="session")
def mesh4():
    return build_uniform(4)


@pytest.fixture(scope="session")
def dofmap4(mesh4):
    return build_dofmap(mesh4)


@pytest.fixture(scope="session")
def quad4(mesh4, dofmap4):
    return contact_quadrature(mesh4, dofmap4)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
