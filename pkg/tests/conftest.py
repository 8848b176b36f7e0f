import numpy as np
import pytest

from sipfpic.config import SimParams, validate


def small_params(**kw) -> SimParams:
    """A cheap 3D run: H=8, P=256, L=20, five steps."""
    base = dict(grid_h=8, n_particles=256, n_steps=5, dt=1e-5, box_len=20.0, dim=3)
    base.update(kw)
    return validate(SimParams(**base))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
