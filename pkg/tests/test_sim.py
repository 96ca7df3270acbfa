import numpy as np
import pytest

from wavelab.damping import CoefficientProfile, DampingSpec, eval_g
from wavelab.energy import energy_ep
from wavelab.sim import (BoundarySolverError, Grid, InitialData, NumericalBlowupError,
                         SimState, run, solve_boundary_rho, step,
                         step_boundary_damped, write_snapshot_csv)

LIN = DampingSpec.linear(1.0)
POLY3 = DampingSpec.polynomial(3.0)
PROFILE = CoefficientProfile()


class TestGridAndInit:
    def test_cfl_one(self):
        g = Grid(128)
        assert g.dt == g.dx == 1.0 / 128

    def test_initial_consistency(self):
        grid = Grid(256)
        st = InitialData.sine().sample(grid)
        # rho - xi = 2 z_t and rho + xi = 2 z_x
        assert np.allclose(st.rho - st.xi, 0.0)
        assert np.allclose(0.5 * (st.rho + st.xi),
                           np.pi * np.cos(np.pi * grid.x), atol=1e-12)
        assert st.rho[0] == st.xi[0] and st.rho[-1] == st.xi[-1]

    def test_centered_difference_fallback(self):
        grid = Grid(512)
        exact = InitialData.sine().sample(grid)
        no_deriv = InitialData(z0=lambda x: np.sin(np.pi * x),
                               z1=lambda x: np.zeros_like(x))
        st = no_deriv.sample(grid)
        assert np.allclose(st.rho, exact.rho, atol=1e-4)

    def test_rejects_nonvanishing_ends(self):
        bad = InitialData(z0=lambda x: x, z1=lambda x: np.zeros_like(x))
        with pytest.raises(ValueError):
            bad.sample(Grid(16))

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            InitialData.preset("square")


class TestStep:
    def test_zero_state_stays_zero(self):
        grid = Grid(32)
        st = SimState(0.0, np.zeros(33), np.zeros(33), np.zeros(33))
        out = step(st, POLY3, PROFILE, grid)
        assert np.all(out.rho == 0) and np.all(out.xi == 0) and np.all(out.z == 0)

    def test_pure_transport_conserves_and_recurs(self):
        grid = Grid(64)
        st = InitialData.sine_mix().sample(grid)
        zero = CoefficientProfile.zero()
        e0 = energy_ep(st, 3.0)
        cur = st
        for _ in range(2 * grid.n_cells):  # one full reflection period
            cur = step(cur, LIN, zero, grid)
        assert abs(energy_ep(cur, 3.0) - e0) / e0 <= 1e-12
        assert np.allclose(cur.rho, st.rho, atol=1e-12)
        assert np.allclose(cur.xi, st.xi, atol=1e-12)

    def test_one_step_matches_dense_matrix_oracle(self):
        # independent oracle: the same splitting assembled as a dense linear
        # map on the stacked state (linear damping makes every substep linear)
        n = 8
        grid = Grid(n)
        a = np.ones(n + 1)

        class FlatProfile:
            a0 = 1.0

            def sample(self, x):
                return np.ones_like(x)

        profile = FlatProfile()
        tau = 0.5 * grid.dt
        lam = 1.0 - tau * a + 0.5 * (tau * a) ** 2  # RK2 factor on u per node
        m = n + 1
        S = np.zeros((2 * m, 2 * m))  # source half-step
        for j in range(m):
            S[j, j] = 0.5 * (1 + lam[j])
            S[j, m + j] = 0.5 * (1 - lam[j])
            S[m + j, j] = 0.5 * (1 - lam[j])
            S[m + j, m + j] = 0.5 * (1 + lam[j])
        T = np.zeros((2 * m, 2 * m))  # shift + reflections
        for j in range(n):
            T[j, j + 1] = 1.0
        for j in range(1, m):
            T[m + j, m + j - 1] = 1.0
        T[m, 1] = 1.0          # xi(0) <- new rho(0) = old rho(1)
        T[n, m + n - 1] = 1.0  # rho(1) <- new xi(1) = old xi(n-1)
        M = S @ T @ S

        st = SimState(0.0, np.ones(m), np.zeros(m), np.zeros(m))
        out = step(st, LIN, profile, grid)
        expected = M @ np.concatenate([st.rho, st.xi])
        assert np.allclose(out.rho, expected[:m], atol=1e-14)
        assert np.allclose(out.xi, expected[m:], atol=1e-14)

    def test_reflection_exactness(self):
        grid = Grid(64)
        cur = InitialData.sine_mix().sample(grid)
        for _ in range(50):
            cur = step(cur, POLY3, PROFILE, grid)
            assert cur.rho[0] == cur.xi[0]
            assert cur.rho[-1] == cur.xi[-1]

    def test_monotone_energy(self):
        grid = Grid(128)
        for spec in (LIN, POLY3, DampingSpec.expflat(1.0, 1.0)):
            cur = InitialData.sine().sample(grid)
            e_prev = energy_ep(cur, 3.0)
            e0 = e_prev
            for _ in range(100):
                cur = step(cur, spec, PROFILE, grid)
                e = energy_ep(cur, 3.0)
                assert e <= e_prev + 1e-12 * e0
                e_prev = e


class TestBoundaryDamped:
    def test_linear_zero_incoming(self):
        assert solve_boundary_rho(LIN, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_linear_unit_incoming(self):
        # rho + 1 + (rho - 1) = 0  =>  rho = 0
        assert solve_boundary_rho(LIN, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_cubic_root_vs_scan(self):
        # brute-force sign-change scan at 1e-12 resolution near the root
        spec = POLY3
        xi_val = 1.0
        root = solve_boundary_rho(spec, xi_val)

        def h(r):
            return r + xi_val + 2.0 * eval_g(spec, 0.5 * (r - xi_val))

        grid = np.linspace(root - 1e-6, root + 1e-6, 2_000_001)
        vals = h(grid)
        k = np.argmax(vals > 0)
        assert abs(grid[k] - root) <= 1e-11
        assert abs(h(root)) <= 1e-12

    def test_magnitude_never_grows(self, rng):
        for spec in (LIN, POLY3, DampingSpec.expflat(1.0, 1.0)):
            for xi_val in rng.uniform(-5, 5, 200):
                root = solve_boundary_rho(spec, float(xi_val))
                assert abs(root) <= abs(xi_val) + 1e-12

    def test_step_boundary_monotone(self):
        grid = Grid(128)
        cur = InitialData.sine().sample(grid)
        e_prev = energy_ep(cur, 3.0)
        for _ in range(200):
            cur = step_boundary_damped(cur, POLY3, grid)
            e = energy_ep(cur, 3.0)
            assert e <= e_prev + 1e-12
            e_prev = e
        assert cur.z[0] == 0.0  # Dirichlet end pinned exactly


class TestRun:
    def test_t_zero_single_snapshot(self):
        traj = run(InitialData.sine(), LIN, Grid(32), 0.0, profile=PROFILE, p=2.0)
        assert traj.n_snapshots == 1
        st = traj.state(0)
        ref = InitialData.sine().sample(Grid(32))
        assert np.allclose(st.rho, ref.rho)

    def test_zero_init_stays_zero(self):
        zero = InitialData(z0=lambda x: np.zeros_like(x),
                           z1=lambda x: np.zeros_like(x))
        traj = run(zero, LIN, Grid(32), 10.0, profile=PROFILE, p=2.0,
                   snapshot_stride=32)
        assert np.all(traj.rho == 0) and np.all(traj.z == 0)

    def test_deterministic(self):
        kw = dict(profile=PROFILE, p=3.0, snapshot_stride=16)
        t1 = run(InitialData.sine(), POLY3, Grid(64), 2.0, **kw)
        t2 = run(InitialData.sine(), POLY3, Grid(64), 2.0, **kw)
        assert np.array_equal(t1.rho, t2.rho)
        assert np.array_equal(t1.z, t2.z)
        assert np.array_equal(t1.estep, t2.estep)

    def test_snapshot_times_exact_multiples(self):
        traj = run(InitialData.sine(), LIN, Grid(64), 1.0, profile=PROFILE,
                   p=2.0, snapshot_stride=8)
        assert np.allclose(traj.times, np.arange(traj.n_snapshots) * 8 / 64, atol=0)

    def test_run_equals_repeated_step(self):
        grid = Grid(32)
        n_steps = 20
        traj = run(InitialData.sine_mix(), POLY3, grid, n_steps * grid.dt,
                   profile=PROFILE, p=3.0, snapshot_stride=n_steps)
        cur = InitialData.sine_mix().sample(grid)
        for _ in range(n_steps):
            cur = step(cur, POLY3, PROFILE, grid)
        assert np.allclose(traj.rho[-1], cur.rho, rtol=1e-13, atol=1e-14)
        assert np.allclose(traj.xi[-1], cur.xi, rtol=1e-13, atol=1e-14)
        assert np.allclose(traj.z[-1], cur.z, rtol=1e-12, atol=1e-14)

    def test_run_boundary_equals_repeated_step(self):
        grid = Grid(32)
        n_steps = 20
        traj = run(InitialData.sine(), POLY3, grid, n_steps * grid.dt,
                   p=3.0, snapshot_stride=n_steps, mode="boundary")
        cur = InitialData.sine().sample(grid)
        for _ in range(n_steps):
            cur = step_boundary_damped(cur, POLY3, grid)
        assert np.allclose(traj.rho[-1], cur.rho, rtol=1e-12, atol=1e-13)

    def test_conservation_without_damping(self):
        traj = run(InitialData.sine(), LIN, Grid(256), 5.0,
                   profile=CoefficientProfile.zero(), p=1.5, snapshot_stride=256)
        e = traj.estep
        assert np.max(np.abs(e - e[0])) / e[0] <= 1e-10

    def test_blowup_detected(self):
        huge = InitialData.sine(amplitude=1e200)
        with pytest.raises(NumericalBlowupError) as err:
            run(huge, LIN, Grid(32), 1.0, profile=PROFILE, p=3.0)
        assert err.value.step_index >= 0

    def test_z_dirichlet_pinned(self):
        traj = run(InitialData.sine_mix(), POLY3, Grid(64), 2.0, profile=PROFILE,
                   p=2.0, snapshot_stride=16)
        assert np.all(traj.z[:, 0] == 0.0)
        # sin(2 pi) is one rounding error away from 0, so the right end can
        # pick up a ~1e-16 seed from the very first step
        assert np.max(np.abs(traj.z[:, -1])) <= 1e-15

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            run(InitialData.sine(), LIN, Grid(16), 1.0, profile=PROFILE, mode="weird")
        with pytest.raises(ValueError):
            run(InitialData.sine(), LIN, Grid(16), 1.0, mode="distributed")
        with pytest.raises(ValueError):
            run(InitialData.sine(), LIN, Grid(16), 1.0, profile=PROFILE,
                mode="boundary")

    def test_snapshot_csv(self, tmp_path):
        traj = run(InitialData.sine(), LIN, Grid(16), 0.5, profile=PROFILE,
                   p=2.0, snapshot_stride=4)
        path = tmp_path / "snaps.csv"
        write_snapshot_csv(traj, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x,rho,xi,z"
        assert len(lines) == 1 + traj.n_snapshots * 17


class TestZReconstruction:
    def test_z_tracks_primitive(self):
        # undamped: z(t, x) obeys the closed-form standing wave
        grid = Grid(512)
        traj = run(InitialData.sine(), LIN, grid, 0.5,
                   profile=CoefficientProfile.zero(), p=2.0,
                   snapshot_stride=grid.n_cells // 4)
        t = traj.times[-1]
        exact = np.sin(np.pi * grid.x) * np.cos(np.pi * t)
        assert np.max(np.abs(traj.z[-1] - exact)) < 5e-5
