"""The jitted kernels and their numpy fallbacks must agree to rounding."""

import numpy as np
import pytest

from wavelab import _kernels
from wavelab.damping import CoefficientProfile, DampingSpec
from wavelab.sim import Grid, InitialData


@pytest.fixture()
def both_backends():
    saved = _kernels.get_backend()
    yield
    _kernels.set_backend(saved)


def _run_both(fn, *args):
    out = {}
    for backend in ("numba", "numpy"):
        _kernels.set_backend(backend)
        out[backend] = fn(*args)
    return out


SPECS = [DampingSpec.linear(1.0), DampingSpec.polynomial(3.0),
         DampingSpec.expflat(1.0, 1.0)]


class TestBackendAgreement:
    def test_g_vector_matches_scalar(self, rng):
        # the two backends may use different pow implementations (ulp-level)
        s = rng.uniform(-3, 3, 500)
        for spec in SPECS:
            kind, c1, c2 = spec.kernel_params()
            vec = _kernels.g_vector(kind, c1, c2, s)
            scal = np.array([_kernels._g_scalar(kind, c1, c2, float(v)) for v in s])
            assert np.allclose(vec, scal, rtol=1e-14, atol=1e-300)

    def test_simulate_distributed(self, both_backends):
        grid = Grid(48)
        a = CoefficientProfile().sample(grid.x)
        for spec in SPECS:
            kind, c1, c2 = spec.kernel_params()

            def go():
                st = InitialData.sine_mix().sample(grid)
                return _kernels.simulate_distributed(
                    st.rho, st.xi, st.z, a, kind, c1, c2, 3.0, 96, 16, True, True)

            out = _run_both(lambda: go())
            for i in (0, 1, 2):
                assert np.allclose(out["numba"][i], out["numpy"][i],
                                   rtol=1e-13, atol=1e-15)
            assert np.allclose(out["numba"][3], out["numpy"][3], rtol=1e-12)
            assert np.allclose(out["numba"][4], out["numpy"][4], rtol=1e-11, atol=1e-14)
            assert out["numba"][5] == out["numpy"][5] == -1

    def test_simulate_boundary(self, both_backends):
        grid = Grid(48)
        for spec in SPECS:
            kind, c1, c2 = spec.kernel_params()

            def go():
                st = InitialData.sine().sample(grid)
                return _kernels.simulate_boundary(
                    st.rho, st.xi, st.z, kind, c1, c2, 3.0, 96, 16, True)

            out = _run_both(lambda: go())
            for i in (0, 1, 2):
                assert np.allclose(out["numba"][i], out["numpy"][i],
                                   rtol=1e-12, atol=1e-14)

    def test_two_point_sup(self, both_backends):
        vals = np.geomspace(1e-3, 1e3, 150)
        grid = np.concatenate([-vals[::-1], vals])
        out = _run_both(lambda: _kernels.two_point_sup(grid, 1.5, 2.0))
        assert out["numba"] == pytest.approx(out["numpy"], rel=1e-12)

    def test_conjugate_sup_batch(self, both_backends, rng):
        y = np.linspace(-50, 50, 20001)
        pot = 0.5 * y**2
        bs = rng.uniform(-3, 3, 40)
        out = _run_both(lambda: _kernels.conjugate_sup_batch(bs, y, pot))
        assert np.allclose(out["numba"], out["numpy"], rtol=1e-14, atol=1e-14)

    def test_boundary_root_twins(self, rng):
        for spec in SPECS:
            kind, c1, c2 = spec.kernel_params()
            for xi_val in rng.uniform(-4, 4, 50):
                a = _kernels._boundary_root(kind, c1, c2, float(xi_val))
                b = _kernels.boundary_root_numpy(kind, c1, c2, float(xi_val))
                assert a == pytest.approx(b, abs=1e-13)


class TestBackendSelection:
    def test_set_backend_validates(self):
        with pytest.raises(ValueError):
            _kernels.set_backend("cuda")

    def test_get_backend(self, both_backends):
        _kernels.set_backend("numpy")
        assert _kernels.get_backend() == "numpy"
        _kernels.set_backend("numba")
        assert _kernels.get_backend() == "numba"
