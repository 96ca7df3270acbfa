"""Energy functionals, dissipation rate, balance residuals, region measures.

All quadrature on simulation data is trapezoidal on the uniform grid; the
higher-order oracles live in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .convexity import shifted_potential
from .damping import CoefficientProfile, DampingSpec, eval_g

__all__ = [
    "signed_power",
    "trapezoid_weights",
    "energy_ep",
    "energy_cal_ep",
    "energy_etilde",
    "dissipation_rate",
    "dissipation_residual",
    "region_measures",
    "EnergyTrace",
    "build_trace",
]


def signed_power(x, r: float):
    """sgn(x) |x|^r, with the value 0 at x = 0 for every r >= 0."""
    if r < 0:
        raise ValueError("exponent must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.abs(x) ** r
    return out if out.ndim else float(out)


def trapezoid_weights(n_nodes: int, dx: float) -> np.ndarray:
    w = np.full(n_nodes, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


def _check_p(p: float):
    if not (p > 1):
        raise ValueError("energies are defined for p > 1")


def energy_ep(state, p: float) -> float:
    """(1/p) integral of |rho|^p + |xi|^p (characteristic-variable energy)."""
    _check_p(p)
    rho = np.asarray(state.rho, float)
    xi = np.asarray(state.xi, float)
    w = trapezoid_weights(rho.size, 1.0 / (rho.size - 1))
    return float(np.sum(w * (np.abs(rho) ** p + np.abs(xi) ** p)) / p)


def energy_cal_ep(state, p: float) -> float:
    """(1/p) integral of |z_x|^p + |z_t|^p (primitive-variable energy)."""
    _check_p(p)
    rho = np.asarray(state.rho, float)
    xi = np.asarray(state.xi, float)
    zx = 0.5 * (rho + xi)
    zt = 0.5 * (rho - xi)
    w = trapezoid_weights(rho.size, 1.0 / (rho.size - 1))
    return float(np.sum(w * (np.abs(zx) ** p + np.abs(zt) ** p)) / p)


def energy_etilde(state, p: float) -> float:
    """Regularized energy: integral of the shifted potential of both fields
    (defined for 1 < p < 2)."""
    if not (1.0 < p < 2.0):
        raise ValueError("the regularized energy needs 1 < p < 2")
    rho = np.asarray(state.rho, float)
    xi = np.asarray(state.xi, float)
    w = trapezoid_weights(rho.size, 1.0 / (rho.size - 1))
    return float(np.sum(w * (shifted_potential(rho, p) + shifted_potential(xi, p))))


def dissipation_rate(state, damping: DampingSpec, profile: CoefficientProfile,
                     p: float) -> float:
    """integral of a(x) g((rho-xi)/2) (sgn(rho)|rho|^{p-1} - sgn(xi)|xi|^{p-1});
    this is minus the time derivative of the characteristic energy, and is
    nonnegative for monotone damping."""
    _check_p(p)
    rho = np.asarray(state.rho, float)
    xi = np.asarray(state.xi, float)
    n = rho.size - 1
    x = np.arange(n + 1) / n
    a = profile.sample(x)
    u = 0.5 * (rho - xi)
    integrand = a * eval_g(damping, u) * (signed_power(rho, p - 1) - signed_power(xi, p - 1))
    w = trapezoid_weights(rho.size, 1.0 / n)
    return float(np.sum(w * integrand))


def dissipation_residual(times: np.ndarray, energy: np.ndarray,
                         dissipation: np.ndarray) -> dict:
    """Balance residual r_k = |(E_{k+1} - E_k)/dt + (D_k + D_{k+1})/2|.

    ``times`` must be uniformly spaced; the midpoint dissipation is the
    average of the two endpoint values.  Returns the residual series with its
    max and discrete L2 norms.
    """
    times = np.asarray(times, float)
    energy = np.asarray(energy, float)
    dissipation = np.asarray(dissipation, float)
    if times.size < 2:
        raise ValueError("need at least two samples")
    dt = times[1] - times[0]
    res = np.abs(np.diff(energy) / dt + 0.5 * (dissipation[:-1] + dissipation[1:]))
    return {
        "residual": res,
        "max": float(res.max()),
        "l2": float(np.sqrt(np.sum(res**2) * dt)),
    }


def trajectory_dissipation_residual(traj, p: float) -> dict:
    """Per-step balance residual of a trajectory recorded with
    record_energy=True and record_dissipation=True."""
    if traj.estep is None or traj.dstep is None:
        raise ValueError("trajectory lacks per-step energy/dissipation series")
    if p != traj.p:
        raise ValueError("p does not match the recorded series")
    n_steps = traj.estep.size - 1
    times = np.arange(n_steps + 1) * traj.grid.dt
    return dissipation_residual(times, traj.estep, traj.dstep)


def region_measures(state, eps: float, eta: float) -> tuple[float, float, float]:
    """Trapezoid-weighted measures of the three field-gap regions
    {|rho-xi| <= 2 eps}, {2 eps < |rho-xi| <= 2 eta}, {|rho-xi| > 2 eta};
    they always sum to 1."""
    if not (0 < eps <= eta):
        raise ValueError("need 0 < eps <= eta")
    rho = np.asarray(state.rho, float)
    xi = np.asarray(state.xi, float)
    gap = np.abs(rho - xi)
    w = trapezoid_weights(rho.size, 1.0 / (rho.size - 1))
    m1 = float(np.sum(w[gap <= 2 * eps]))
    m3 = float(np.sum(w[gap > 2 * eta]))
    m2 = float(np.sum(w)) - m1 - m3
    return m1, m2, m3


@dataclass
class EnergyTrace:
    """Per-snapshot time series of the energies and diagnostics."""

    t: np.ndarray
    ep: np.ndarray
    cal_ep: np.ndarray
    etilde: np.ndarray       # NaN outside 1 < p < 2
    dissipation: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    p: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,E_p,calE_p,Etilde_p,dissipation,m1,m2,m3\n")
            for i in range(self.t.size):
                fh.write(
                    f"{self.t[i]:.17g},{self.ep[i]:.17g},{self.cal_ep[i]:.17g},"
                    f"{self.etilde[i]:.17g},{self.dissipation[i]:.17g},"
                    f"{self.m1[i]:.17g},{self.m2[i]:.17g},{self.m3[i]:.17g}\n")

    def summary(self, estep: Optional[np.ndarray] = None) -> dict:
        out = {
            "p": self.p,
            "E_p_initial": float(self.ep[0]),
            "E_p_final": float(self.ep[-1]),
        }
        series = estep if estep is not None else self.ep
        if series.size > 1:
            out["max_step_increase"] = float(np.max(np.diff(series)))
        else:
            out["max_step_increase"] = 0.0
        return out

    def write_summary_json(self, path, estep: Optional[np.ndarray] = None) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(estep), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_trace(traj, damping: DampingSpec, profile: CoefficientProfile,
                eps_of_t=None, eta: float = 1.0) -> EnergyTrace:
    """Assemble the snapshot-level energy trace of a trajectory.

    ``eps_of_t`` maps a snapshot time to the small-gap threshold used by the
    region split (typically the decreasing threshold of a weight family);
    when omitted, eps = eta throughout.
    """
    p = traj.p
    K = traj.n_snapshots
    ep = np.empty(K)
    cal = np.empty(K)
    eti = np.full(K, np.nan)
    dis = np.empty(K)
    m1 = np.empty(K)
    m2 = np.empty(K)
    m3 = np.empty(K)
    for i in range(K):
        st = traj.state(i)
        ep[i] = energy_ep(st, p)
        cal[i] = energy_cal_ep(st, p)
        if 1.0 < p < 2.0:
            eti[i] = energy_etilde(st, p)
        dis[i] = dissipation_rate(st, damping, profile, p)
        eps = eta if eps_of_t is None else float(eps_of_t(st.t))
        eps = min(max(eps, 1e-300), eta)
        m1[i], m2[i], m3[i] = region_measures(st, eps, eta)
    return EnergyTrace(traj.times.copy(), ep, cal, eti, dis, m1, m2, m3, p)
