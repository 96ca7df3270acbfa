import numpy as np
import pytest

from wavelab import _kernels
from wavelab.damping import CoefficientProfile, DampingSpec
from wavelab.sim import Grid, InitialData


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger jit compilation once so timed tests measure the work, not the
    compiler."""
    grid = Grid(16)
    state = InitialData.sine().sample(grid)
    a = CoefficientProfile().sample(grid.x)
    spec = DampingSpec.polynomial(3.0)
    kind, c1, c2 = spec.kernel_params()
    _kernels.simulate_distributed(state.rho.copy(), state.xi.copy(), state.z.copy(),
                                  a, kind, c1, c2, 3.0, 16, 16, True, True)
    _kernels.simulate_boundary(state.rho.copy(), state.xi.copy(), state.z.copy(),
                               kind, c1, c2, 3.0, 16, 16, True)
    _kernels.two_point_sup(np.array([-1.0, -0.5, 0.5, 1.0]), 1.5, 1.0)
    _kernels.conjugate_sup_batch(np.array([0.5]), np.linspace(-1, 1, 8),
                                 np.zeros(8))
    yield


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
