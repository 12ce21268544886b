import numpy as np
import pytest

from hitchin_disk import painleve


@pytest.fixture(scope="session")
def ptable():
    """Standard solved Painleve table shared by the whole suite."""
    return painleve.solve_psi(rho_min=1e-6, rho_max=16.0, n=4096, tol=1e-10)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
