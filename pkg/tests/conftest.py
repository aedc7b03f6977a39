import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fluidmembrane.coefficients import Coefficients
from fluidmembrane.space import DiscreteSpace, Geometry, SurfaceField

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GEOMETRIES = {"ball": Geometry.ball(1.0), "shell": Geometry.shell(0.5, 1.0)}


@pytest.fixture(params=["ball", "shell"])
def space(request):
    return DiscreteSpace(GEOMETRIES[request.param], 4, 12)


@pytest.fixture
def ball():
    return DiscreteSpace(Geometry.ball(1.0), 4, 12)


@pytest.fixture
def shell():
    return DiscreteSpace(Geometry.shell(0.5, 1.0), 4, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def variable_coefficients(sp, kappa=True, delta=0.0):
    sigma = SurfaceField.from_function(sp, lambda t, p: 1.0 + 0.3 * np.sin(t) * np.cos(p))
    kap = (SurfaceField.from_function(sp, lambda t, p: 1.0 + 0.5 * np.cos(t))
           if kappa else 0.0)
    return Coefficients(sp, sigma=sigma, kappa=kap, delta=delta)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
