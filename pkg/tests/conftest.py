import numpy as np
import pytest

from burgers_series.config import SolverConfig, initial_field, preset_potential
from burgers_series.fields import make_grid
from burgers_series.oracles import PotentialData
from burgers_series.scheme import run_global


def run_preset(n, N, nu, steps, preset, **kw):
    cfg = SolverConfig(n, N, nu, steps, initial_condition=preset, **kw)
    h = initial_field(cfg.initial_condition, make_grid(n, N))
    return cfg, h, run_global(h, cfg)


@pytest.fixture(scope="session")
def sine_run_1d():
    """Four steps of the 1D sine problem on 128 points."""
    return run_preset(1, 128, 0.1, 4, "sine")


@pytest.fixture(scope="session")
def potential_run_2d():
    """Two steps of the 2D product-cosine potential problem on 64^2 points."""
    return run_preset(2, 64, 0.2, 2, "potential")


@pytest.fixture
def sine_potential():
    return PotentialData(preset_potential("sine", 1), 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
