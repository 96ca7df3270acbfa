"""Space-time multiplier identities and the auxiliary elliptic problems.

Each identity is an exact continuum balance along strong solutions; on
discrete trajectories both sides are evaluated with trapezoidal quadrature
in x and t, and the residual |lhs - rhs| must vanish under simultaneous
grid refinement.  That residual, not any inequality constant, is the
primary verification surface.

For p >= 2 the identities use the plain p-power pair; for 1 < p < 2 they
use the shifted pair and the regularized energy throughout (the plain pair
would put a negative power of |rho| inside the second identity).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .convexity import (shifted_gradient, shifted_gradient_prime, shifted_potential)
from .damping import CoefficientProfile, CutoffSet, DampingSpec
from .energy import signed_power, trapezoid_weights

__all__ = [
    "EllipticSolution",
    "MultiplierReport",
    "solve_elliptic",
    "tridiagonal_oracle",
    "elliptic_time_derivative",
    "identity_residual",
    "estimate_ratio_vLq",
]

IDENTITIES = ("first", "second", "third")


@dataclass
class EllipticSolution:
    """Nodal solution of v'' = source with v(0) = v(1) = 0."""

    v: np.ndarray
    source: np.ndarray


def _cumtrapz0(y: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative trapezoid from the left end, starting at 0."""
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * dx, out=out[1:])
    return out


def solve_elliptic(source: np.ndarray, dx: float) -> EllipticSolution:
    """Nodal Green-formula solution of v'' = source, v(0) = v(1) = 0:

        v(x) = -x * integral_x^1 (1-y) source(y) dy
               + (x-1) * integral_0^x y source(y) dy

    with composite trapezoidal quadrature for both integrals.
    """
    source = np.asarray(source, dtype=float)
    if not np.all(np.isfinite(source)):
        raise ValueError("source must be finite")
    n = source.size - 1
    x = np.arange(n + 1) * dx
    left = _cumtrapz0(x * source, dx)                  # integral_0^x y s dy
    right_all = _cumtrapz0((1.0 - x) * source, dx)
    right = right_all[-1] - right_all                  # integral_x^1 (1-y) s dy
    v = -x * right + (x - 1.0) * left
    return EllipticSolution(v=v, source=source.copy())


def tridiagonal_oracle(source: np.ndarray, dx: float) -> np.ndarray:
    """Second-difference solve of the same boundary-value problem; kept as
    the independent cross-check of the Green formula."""
    source = np.asarray(source, dtype=float)
    n = source.size - 1
    m = n - 1  # interior unknowns
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[1, :] = -2.0
    ab[2, :-1] = 1.0
    rhs = source[1:-1] * dx * dx
    v = np.zeros(n + 1)
    v[1:-1] = solve_banded((1, 1), ab, rhs)
    return v


def _gradient_pair(p: float):
    """(f, f', F) triple: plain p-power pair for p >= 2, shifted pair below."""
    if p >= 2.0:
        return (lambda y: signed_power(y, p - 1.0),
                lambda y: (p - 1.0) * np.abs(y) ** (p - 2.0),
                lambda y: np.abs(y) ** p / p)
    return (lambda y: shifted_gradient(y, p),
            lambda y: shifted_gradient_prime(y, p),
            lambda y: shifted_potential(y, p))


def elliptic_time_derivative(z: np.ndarray, z_t: np.ndarray, psi3: np.ndarray,
                             p: float, dx: float) -> np.ndarray:
    """Time derivative of the auxiliary elliptic solution, by applying the
    Green formula to the differentiated source psi3 f'(z) z_t."""
    _, fprime, _ = _gradient_pair(p)
    return solve_elliptic(psi3 * fprime(z) * z_t, dx).v


@dataclass
class MultiplierReport:
    identity: str
    S: float
    T: float
    lhs: float
    rhs: float
    residual: float
    normalized: float       # residual / E(0)^2
    n_cells: int
    p: float
    tilde: bool
    weight: str = ""        # describes the time weight used

    def to_dict(self) -> dict:
        return {
            "id": self.identity,
            "S": self.S,
            "T": self.T,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "normalized": self.normalized,
            "n_cells": self.n_cells,
            "p": self.p,
            "tilde": self.tilde,
            "weight": self.weight,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _window_indices(times: np.ndarray, S: float, T: float) -> tuple[int, int]:
    if times.size < 3:
        raise ValueError("need at least 3 snapshots")
    dt_snap = times[1] - times[0]
    iS = int(round((S - times[0]) / dt_snap))
    iT = int(round((T - times[0]) / dt_snap))
    if (iS < 0 or iT >= times.size or iT - iS < 2
            or abs(times[iS] - S) > 0.25 * dt_snap
            or abs(times[iT] - T) > 0.25 * dt_snap):
        raise ValueError(
            f"window [{S}, {T}] is not resolved by snapshots at stride "
            f"{dt_snap:.6g}; re-run with a stride dividing the window ends")
    return iS, iT


def _time_derivative(series: np.ndarray, dt: float) -> np.ndarray:
    """Second-order differences (centered inside, one-sided at the ends)."""
    d = np.empty_like(series)
    d[1:-1] = (series[2:] - series[:-2]) / (2.0 * dt)
    d[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt)
    d[-1] = (3.0 * series[-1] - 4.0 * series[-2] + series[-3]) / (2.0 * dt)
    return d


def identity_residual(traj, identity: str, weight, damping: DampingSpec,
                      profile: CoefficientProfile, cutoffs: CutoffSet,
                      S: float, T: float) -> MultiplierReport:
    """Evaluate both sides of one multiplier identity over [S, T].

    ``weight`` provides the concave time weight through ``phi_prime``
    (a WeightFamily, or any object with that method).  The snapshot grid
    must contain S and T; all x and t quadrature is trapezoidal.
    """
    if identity not in IDENTITIES:
        raise ValueError(f"identity must be one of {IDENTITIES}")
    p = traj.p
    tilde = p < 2.0
    f, fprime, F = _gradient_pair(p)

    iS, iT = _window_indices(traj.times, S, T)
    sl = slice(iS, iT + 1)
    tt = traj.times[sl]
    dt_snap = tt[1] - tt[0]
    rho = traj.rho[sl]
    xi = traj.xi[sl]
    z = traj.z[sl]
    n = traj.grid.n_cells
    x = traj.grid.x
    dx = traj.grid.dx
    w = trapezoid_weights(n + 1, dx)
    a = profile.sample(x)
    u = 0.5 * (rho - xi)
    kindargs = damping.kernel_params()
    from ._kernels import g_vector

    gu = g_vector(kindargs[0], kindargs[1], kindargs[2], u)

    Frho, Fxi = F(rho), F(xi)
    frho, fxi = f(rho), f(xi)
    if tilde:
        E = (Frho + Fxi) @ w
    else:
        E = (np.abs(rho) ** p + np.abs(xi) ** p) @ w / p
    phi_p = np.asarray(weight.phi_prime(tt), dtype=float)
    P = E * phi_p
    Pprime = _time_derivative(P, dt_snap)

    def tint(series: np.ndarray) -> float:
        return float(np.trapezoid(series, dx=dt_snap))

    psi1 = cutoffs.psi1(x)
    psi2 = cutoffs.psi2(x)
    psi3 = cutoffs.psi3(x)

    if identity == "first":
        xpsi1_prime = psi1 + x * cutoffs.psi1_prime(x)
        B = (x * psi1 * (Fxi - Frho)) @ w
        C = ((1.0 - xpsi1_prime) * (Frho + Fxi)) @ w
        D = (x * a * psi1 * gu * (frho + fxi)) @ w
        # flux through x=1 left over by the integration by parts (x psi1 = 1
        # there and the fields do not vanish)
        bdry = Frho[:, -1] + Fxi[:, -1]
        lhs = tint(E**2 * phi_p)
        rhs = (P[-1] * B[-1] - P[0] * B[0]) + tint(P * C) \
            + tint(Pprime * (-B)) - tint(P * D) + tint(P * bdry)
    elif identity == "second":
        B = (psi2 * z * (fxi - frho)) @ w
        C = (cutoffs.psi2_prime(x) * z * (frho + fxi)) @ w
        D = (psi2 * a * z * gu * (fprime(rho) + fprime(xi))) @ w
        G = (psi2 * u * (frho - fxi)) @ w
        lhs = tint(P * ((psi2 * (rho * frho + xi * fxi)) @ w))
        rhs = (P[-1] * B[-1] - P[0] * B[0]) + tint(Pprime * (-B)) \
            - tint(P * C) - tint(P * D) + 2.0 * tint(P * G)
    else:
        K = tt.size
        B = np.empty(K)
        C = np.empty(K)
        D = np.empty(K)
        L = np.empty(K)
        for i in range(K):
            v = solve_elliptic(psi3 * f(z[i]), dx).v
            vt = elliptic_time_derivative(z[i], u[i], psi3, p, dx)
            gap = rho[i] - xi[i]
            B[i] = float(np.sum(w * v * gap))
            C[i] = float(np.sum(w * vt * gap))
            D[i] = float(np.sum(w * a * v * gu[i]))
            if tilde:
                L[i] = float(np.sum(w * psi3 * z[i] * f(z[i])))
            else:
                L[i] = float(np.sum(w * psi3 * np.abs(z[i]) ** p))
        lhs = 2.0 * tint(P * L)
        rhs = (P[-1] * B[-1] - P[0] * B[0]) - tint(Pprime * B) \
            - tint(P * C) + 2.0 * tint(P * D)

    residual = abs(lhs - rhs)
    e0_state = traj.state(0)
    if tilde:
        e0 = float((F(e0_state.rho) + F(e0_state.xi)) @ w)
    else:
        e0 = float((np.abs(e0_state.rho) ** p + np.abs(e0_state.xi) ** p) @ w / p)
    if e0 > 0:
        normalized = float(residual / e0**2)
    else:
        normalized = 0.0 if residual == 0.0 else math.inf
    weight_label = getattr(weight, "label", weight.__class__.__name__)
    return MultiplierReport(identity=identity, S=float(tt[0]), T=float(tt[-1]),
                            lhs=float(lhs), rhs=float(rhs), residual=float(residual),
                            normalized=normalized, n_cells=n,
                            p=p, tilde=tilde, weight=weight_label)


def estimate_ratio_vLq(traj, cutoffs: CutoffSet, floor: float = 1e-300) -> dict:
    """Max over snapshots of (integral |v|^q dx) / E_p(t) for p > 2, where v
    solves the auxiliary elliptic problem with source psi3 sgn(z)|z|^{p-1}.

    Snapshots with energy below ``floor`` are skipped.  The bounded ratio is
    the observable counterpart of the elliptic energy estimate.
    """
    p = traj.p
    if not (p > 2):
        raise ValueError("the elliptic energy ratio is formulated for p > 2")
    q = p / (p - 1.0)
    n = traj.grid.n_cells
    dx = traj.grid.dx
    w = trapezoid_weights(n + 1, dx)
    psi3 = cutoffs.psi3(traj.grid.x)
    best = 0.0
    best_t = math.nan
    skipped = 0
    ratios = []
    for i in range(traj.n_snapshots):
        ep = float((np.abs(traj.rho[i]) ** p + np.abs(traj.xi[i]) ** p) @ w / p)
        if ep < floor:
            skipped += 1
            continue
        v = solve_elliptic(psi3 * signed_power(traj.z[i], p - 1.0), dx).v
        ratio = float((np.abs(v) ** q) @ w / ep)
        ratios.append(ratio)
        if ratio > best:
            best = ratio
            best_t = float(traj.times[i])
    return {"max_ratio": best, "argmax_t": best_t, "skipped": skipped,
            "ratios": np.asarray(ratios)}
