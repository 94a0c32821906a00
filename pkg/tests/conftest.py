import numpy as np
import pytest

from factorbreak import DgpSpec, generate, simulate_critical_values


@pytest.fixture(scope="session")
def small_cv():
    """Coarse but valid critical-value table for module-level tests."""
    return simulate_critical_values(0.1, 0.9, grid_size=500, replications=10_000, seed=99)


@pytest.fixture(scope="session")
def change_panel_400():
    """One strong-factor panel with a mid-sample break."""
    panel, truth = generate(DgpSpec(n=400, p=20, seed=(1234, 0)))
    return panel, truth


@pytest.fixture(scope="session")
def null_panel_400():
    """One strong-factor panel without a break (seed picked to not reject)."""
    panel, truth = generate(DgpSpec(n=400, p=20, gamma0=None, seed=(1234, 1)))
    return panel, truth


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
