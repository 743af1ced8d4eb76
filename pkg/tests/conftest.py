import numpy as np
import pytest

import divcurl as dc


@pytest.fixture(scope="session")
def square():
    return dc.generate_rectangle(12, 12, 1.0, 1.0)


@pytest.fixture(scope="session")
def square_fine():
    return dc.generate_rectangle(32, 32, 1.0, 1.0)


@pytest.fixture(scope="session")
def disk():
    return dc.generate_disk(8, 48, 1.0)


@pytest.fixture(scope="session")
def annulus():
    return dc.generate_annulus(0.5, 1.0, 3, 48)


def random_scalar(m, rng):
    return dc.ScalarField(m, rng.standard_normal(len(m.vertices)))


def random_zero_trace(m, rng):
    c = rng.standard_normal(len(m.vertices))
    c[m.boundary_vertices] = 0.0
    return dc.ScalarField(m, c)


def random_vector(m, rng):
    return dc.VectorField(m, rng.standard_normal((len(m.triangles), 2)))


def random_boundary(m, rng):
    return dc.BoundaryFunction(m, rng.standard_normal(len(m.boundary_vertices)))


def shift_to_normal_compat(m, rho, eta):
    """Constant shift of eta making the div-flux balance exact."""
    from divcurl import bvp
    res = bvp.check_compat_normal(rho, eta)
    return eta + dc.BoundaryFunction(
        m, np.full(len(m.boundary_vertices), res / m.perimeter))


def shift_to_tangential_compat(m, omega, eta):
    from divcurl import bvp
    res = bvp.check_compat_tangential(omega, eta)
    return eta + dc.BoundaryFunction(
        m, np.full(len(m.boundary_vertices), res / m.perimeter))
