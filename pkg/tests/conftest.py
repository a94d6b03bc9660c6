import pytest

from relkvn import generators as g
from relkvn.scalars import ScalarExpr, symbol


@pytest.fixture(scope="session")
def free_velocity_set():
    return g.build_free_generators(1.0)


@pytest.fixture(scope="session")
def free_momentum_set():
    return g.build_momentum_generators(1.0)


@pytest.fixture(scope="session")
def constant_force_field():
    # phi = -x1 gives E = (1, 0, 0)
    return g.ForceFieldSym.from_expressions(ScalarExpr(-symbol("x1")))


@pytest.fixture(scope="session")
def electric_field():
    # phi = x1 gives E = (-1, 0, 0)
    return g.ForceFieldSym.from_expressions(ScalarExpr(symbol("x1")))


@pytest.fixture(scope="session")
def magnetic_field():
    # A = (-B0 x2, 0, 0) gives B = (0, 0, B0)
    return g.ForceFieldSym.from_expressions(
        0, (ScalarExpr(-symbol("B0") * symbol("x2")), 0, 0)
    )
