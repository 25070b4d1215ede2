import pytest

from slitmoments.ensemble import EnsembleConfig, run_ensemble
from slitmoments.integrate import IntegratorConfig
from slitmoments.model import PhysParams


@pytest.fixture(scope="session")
def gaussian_run():
    """The 10^4-particle density-weighted run at default physics (about 15 s)."""
    cfg = EnsembleConfig(n=10_000, sampler="gaussian", seed=0)
    return run_ensemble(cfg, PhysParams(), IntegratorConfig(), workers=2)


@pytest.fixture(scope="session")
def grid_run():
    """Default grid run: 2000 particles spread evenly over [-4, 4]."""
    return run_ensemble(EnsembleConfig(), PhysParams(), IntegratorConfig(), workers=2)
