"""
Shared fixtures: the reference front (D = u^2 + u, balanced cubic threshold,
phi(0) = 1/2) and its operator are computed once per session.
"""
import pytest

from degenfront.schemas.kinetics import KineticsPair
from degenfront.services.kinetics import balance_alpha
from degenfront.services.linop import assemble_operator
from degenfront.services.profile import solve_profile
from degenfront.services.spectrum import eigen_spectrum


@pytest.fixture(scope="session")
def kinetics():
    return KineticsPair.quadratic_cubic(1.0, balance_alpha(1.0))


@pytest.fixture(scope="session")
def profile(kinetics):
    return solve_profile(kinetics, n_nodes=2001)


@pytest.fixture(scope="session")
def coarse_profile(kinetics):
    return solve_profile(kinetics, n_nodes=801)


@pytest.fixture(scope="session")
def operator(profile):
    return assemble_operator(profile)


@pytest.fixture(scope="session")
def coarse_operator(coarse_profile):
    return assemble_operator(coarse_profile)


@pytest.fixture(scope="session")
def spectrum_report(operator):
    return eigen_spectrum(operator, vectors=True)


@pytest.fixture(scope="session")
def coarse_report(coarse_operator):
    return eigen_spectrum(coarse_operator, vectors=True)


@pytest.fixture(autouse=True)
def _isolated_registry(monkeypatch):
    # registry files go to each run's own output directory
    monkeypatch.delenv("DEGENFRONT_DATABASE_URL", raising=False)
    monkeypatch.delenv("DEGENFRONT_THREADS", raising=False)
