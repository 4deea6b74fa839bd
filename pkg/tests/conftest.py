import numpy as np
import pytest

from fiberopt.fields import unit_interval
from fiberopt.prescribed import semilinear_cc_family


@pytest.fixture(scope="session")
def cc_family():
    """Concave-convex model family on a small 1-D grid (power nonlinearity)."""
    return semilinear_cc_family(unit_interval(63), q=1.5, r=4.0)


@pytest.fixture(scope="session")
def cc_lambda(cc_family):
    """Parameter comfortably inside the two-branch regime of the family."""
    return 0.25 * cc_family.sampled_threshold(16, seed=0)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
