"""Transport-form time stepping of the damped wave equation on [0, 1].

The second-order equation is evolved through its two characteristic fields
rho = z_x + z_t (moving left) and xi = z_x - z_t (moving right).  With
dt = dx the advection is an exact one-node shift, so all discretization
error lives in the damping source term and in quadrature.  The primitive z
is reconstructed by integrating z_t = (rho - xi)/2 in time, which pins
z(t, 0) = 0 exactly in distributed mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .damping import CoefficientProfile, DampingSpec

__all__ = [
    "Grid",
    "SimState",
    "InitialData",
    "Trajectory",
    "NumericalBlowupError",
    "BoundarySolverError",
    "step",
    "step_boundary_damped",
    "run",
    "write_snapshot_csv",
]


class NumericalBlowupError(RuntimeError):
    def __init__(self, step_index: int):
        super().__init__(f"non-finite field values at step {step_index}")
        self.step_index = step_index


class BoundarySolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid with n_cells cells on [0, 1]; dt = dx exactly."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValueError("need at least 2 cells")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def dt(self) -> float:
        return self.dx

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1


@dataclass
class SimState:
    """Fields at one time: characteristic pair (rho, xi) plus reconstructed z."""

    t: float
    rho: np.ndarray
    xi: np.ndarray
    z: np.ndarray

    def copy(self) -> "SimState":
        return SimState(self.t, self.rho.copy(), self.xi.copy(), self.z.copy())

    @property
    def z_t(self) -> np.ndarray:
        return 0.5 * (self.rho - self.xi)

    @property
    def z_x(self) -> np.ndarray:
        return 0.5 * (self.rho + self.xi)


@dataclass(frozen=True)
class InitialData:
    """Initial displacement/velocity profiles; both must vanish at the ends.

    ``z0_prime`` may be given for an exact characteristic decomposition;
    otherwise the derivative is taken by second-order centered differences
    (one-sided at the two ends).
    """

    z0: Callable[[np.ndarray], np.ndarray]
    z1: Callable[[np.ndarray], np.ndarray]
    z0_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "custom"

    def sample(self, grid: Grid) -> SimState:
        x = grid.x
        z0 = np.asarray(self.z0(x), dtype=float)
        z1 = np.asarray(self.z1(x), dtype=float)
        for name, vals in (("z0", z0), ("z1", z1)):
            tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
            if abs(vals[0]) > tol or abs(vals[-1]) > tol:
                raise ValueError(f"{name} must vanish at x=0 and x=1")
        if self.z0_prime is not None:
            zp = np.asarray(self.z0_prime(x), dtype=float)
        else:
            zp = np.gradient(z0, grid.dx, edge_order=2)
        rho = zp + z1
        xi = zp - z1
        return SimState(t=0.0, rho=rho, xi=xi, z=z0.copy())

    @classmethod
    def sine(cls, amplitude: float = 1.0) -> "InitialData":
        return cls(
            z0=lambda x: amplitude * np.sin(np.pi * x),
            z1=lambda x: np.zeros_like(x),
            z0_prime=lambda x: amplitude * np.pi * np.cos(np.pi * x),
            label="sine",
        )

    @classmethod
    def sine_mix(cls, amplitude: float = 1.0) -> "InitialData":
        """Asymmetric variant: same displacement, velocity sin(2 pi x)."""
        return cls(
            z0=lambda x: amplitude * np.sin(np.pi * x),
            z1=lambda x: amplitude * np.sin(2 * np.pi * x),
            z0_prime=lambda x: amplitude * np.pi * np.cos(np.pi * x),
            label="sine_mix",
        )

    @classmethod
    def sine_cubed(cls, amplitude: float = 1.0) -> "InitialData":
        return cls(
            z0=lambda x: amplitude * np.sin(np.pi * x) ** 3,
            z1=lambda x: np.zeros_like(x),
            z0_prime=lambda x: 3 * amplitude * np.pi * np.sin(np.pi * x) ** 2 * np.cos(np.pi * x),
            label="sine_cubed",
        )

    @classmethod
    def preset(cls, name: str, amplitude: float = 1.0) -> "InitialData":
        factories = {"sine": cls.sine, "sine_mix": cls.sine_mix, "sine_cubed": cls.sine_cubed}
        if name not in factories:
            raise ValueError(f"unknown initial preset {name!r}; have {sorted(factories)}")
        return factories[name](amplitude)


@dataclass
class Trajectory:
    """Snapshots of a run plus optional per-step energy/dissipation series."""

    grid: Grid
    p: float
    mode: str  # "distributed" | "boundary"
    times: np.ndarray          # (K,) snapshot times, exact multiples of dt
    rho: np.ndarray            # (K, n_nodes)
    xi: np.ndarray
    z: np.ndarray
    estep: Optional[np.ndarray] = None  # energy at every step
    dstep: Optional[np.ndarray] = None  # dissipation rate at every step

    @property
    def n_snapshots(self) -> int:
        return self.times.size

    def state(self, i: int) -> SimState:
        return SimState(float(self.times[i]), self.rho[i].copy(), self.xi[i].copy(),
                        self.z[i].copy())

    @property
    def snapshot_stride(self) -> int:
        if self.times.size < 2:
            return 1
        return int(round((self.times[1] - self.times[0]) / self.grid.dt))

    def step_times(self) -> np.ndarray:
        """Times of the per-step series (when they were recorded)."""
        if self.estep is None:
            raise ValueError("no per-step series were recorded")
        return np.arange(self.estep.size) * self.grid.dt


def _half_source(rho, xi, a_vals, spec: DampingSpec, tau: float):
    kind, c1, c2 = spec.kernel_params()
    act = a_vals != 0.0
    if not np.any(act):
        return
    aa = a_vals[act]
    u = 0.5 * (rho[act] - xi[act])
    v = 0.5 * (rho[act] + xi[act])
    um = u - 0.5 * tau * aa * _kernels.g_vector(kind, c1, c2, u)
    u = u - tau * aa * _kernels.g_vector(kind, c1, c2, um)
    rho[act] = v + u
    xi[act] = v - u


def step(state: SimState, damping: DampingSpec, profile: CoefficientProfile,
         grid: Grid) -> SimState:
    """One Strang step (half source, exact shift with reflections, half
    source) of the distributed-damping system.  Pure: returns a new state."""
    if state.rho.shape != (grid.n_nodes,):
        raise ValueError("state does not match grid")
    rho = state.rho.copy()
    xi = state.xi.copy()
    z = state.z.copy()
    a_vals = profile.sample(grid.x)
    dt = grid.dt
    u0 = 0.5 * (rho - xi)
    _half_source(rho, xi, a_vals, damping, 0.5 * dt)
    rho[:-1] = rho[1:]
    xi[1:] = xi[:-1]
    xi[0] = rho[0]
    rho[-1] = xi[-1]
    _half_source(rho, xi, a_vals, damping, 0.5 * dt)
    z += 0.5 * dt * (u0 + 0.5 * (rho - xi))
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(xi))):
        raise NumericalBlowupError(int(round(state.t / dt)))
    return SimState(state.t + dt, rho, xi, z)


def solve_boundary_rho(damping: DampingSpec, xi_val: float) -> float:
    """Incoming rho at x=1 from rho + xi + 2 g((rho - xi)/2) = 0 (bisection)."""
    kind, c1, c2 = damping.kernel_params()
    root = _kernels.boundary_root_numpy(kind, c1, c2, float(xi_val))
    if math.isnan(root):
        raise BoundarySolverError("boundary bisection failed to converge")
    return root


def step_boundary_damped(state: SimState, damping: DampingSpec, grid: Grid) -> SimState:
    """One step of the boundary-damped system: pure transport inside, Dirichlet
    reflection at x=0, nonlinear absorbing condition at x=1."""
    rho = state.rho.copy()
    xi = state.xi.copy()
    z = state.z.copy()
    dt = grid.dt
    u0 = 0.5 * (rho - xi)
    rho[:-1] = rho[1:]
    xi[1:] = xi[:-1]
    xi[0] = rho[0]
    rho[-1] = solve_boundary_rho(damping, float(xi[-1]))
    z += 0.5 * dt * (u0 + 0.5 * (rho - xi))
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(xi))):
        raise NumericalBlowupError(int(round(state.t / dt)))
    return SimState(state.t + dt, rho, xi, z)


def run(init: InitialData, damping: DampingSpec, grid: Grid, t_final: float,
        profile: Optional[CoefficientProfile] = None, p: float = 2.0,
        snapshot_stride: int = 1, mode: str = "distributed",
        record_energy: bool = True, record_dissipation: bool = False) -> Trajectory:
    """Simulate up to t_final, emitting snapshots every ``snapshot_stride``
    steps.  Deterministic; raises NumericalBlowupError on non-finite fields.

    t_final is rounded down to a whole number of steps; snapshot times are
    exact multiples of dt.
    """
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    if mode not in ("distributed", "boundary"):
        raise ValueError("mode must be 'distributed' or 'boundary'")
    state0 = init.sample(grid)
    n_steps = int(math.floor(t_final / grid.dt + 1e-9))
    # snapshots only at completed strides; the t=0 snapshot is always present
    n_steps = (n_steps // snapshot_stride) * snapshot_stride if n_steps else 0
    rho = state0.rho.copy()
    xi = state0.xi.copy()
    z = state0.z.copy()
    if n_steps == 0:
        w = np.full(grid.n_nodes, grid.dx)
        w[0] = w[-1] = 0.5 * grid.dx
        e0 = float(np.sum(w * (np.abs(rho) ** p + np.abs(xi) ** p)) / p)
        return Trajectory(grid, p, mode, np.zeros(1), rho[None, :], xi[None, :],
                          z[None, :], estep=np.array([e0]) if record_energy else None,
                          dstep=None)
    kind, c1, c2 = damping.kernel_params()
    if mode == "distributed":
        if profile is None:
            raise ValueError("distributed mode needs a coefficient profile")
        a_vals = profile.sample(grid.x)
        srho, sxi, sz, estep, dstep, blow = _kernels.simulate_distributed(
            rho, xi, z, a_vals, kind, c1, c2, p, n_steps, snapshot_stride,
            record_energy, record_dissipation)
    else:
        if profile is not None and profile.a0 != 0.0:
            raise ValueError("boundary mode requires the interior damping off")
        srho, sxi, sz, estep, blow = _kernels.simulate_boundary(
            rho, xi, z, kind, c1, c2, p, n_steps, snapshot_stride, record_energy)
        dstep = np.empty(0)
    if blow >= 0:
        raise NumericalBlowupError(blow)
    times = np.arange(srho.shape[0]) * (snapshot_stride * grid.dt)
    return Trajectory(grid, p, mode, times, srho, sxi, sz,
                      estep=estep if record_energy else None,
                      dstep=dstep if record_dissipation else None)


def write_snapshot_csv(traj: Trajectory, path) -> None:
    """Long-format snapshot dump with columns t,x,rho,xi,z."""
    x = traj.grid.x
    with open(path, "w", newline="") as fh:
        fh.write("t,x,rho,xi,z\n")
        for i in range(traj.n_snapshots):
            t = traj.times[i]
            for j in range(x.size):
                fh.write(f"{t:.17g},{x[j]:.17g},{traj.rho[i, j]:.17g},"
                         f"{traj.xi[i, j]:.17g},{traj.z[i, j]:.17g}\n")
