"""Regularized power pair for exponents p in (1, 2) and its convex conjugate.

For p in (1, 2) the plain p-power |y|^p/p has an unbounded second derivative
at the origin, which breaks the estimates that need a quadratic behaviour
near 0.  The shifted pair used instead is

    shifted_gradient(y)  = sgn(y) [ (|y|+1)^(p-1) - 1 ]
    shifted_potential(y) = [ (|y|+1)^p - 1 ] / p - |y|

The potential is even, convex, ~ (p-1)/2 y^2 near 0 and ~ |y|^p/p at
infinity; the gradient is its derivative, odd, increasing, concave on
[0, inf).  The module also provides the convex conjugate of the potential
(computed in closed form through the gradient inverse), the Young-type
product inequality checkers, and the empirical-constant sweeps used by the
verification suites.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels

__all__ = [
    "PExponent",
    "shifted_gradient",
    "shifted_gradient_prime",
    "shifted_potential",
    "shifted_gradient_inverse",
    "shifted_conjugate",
    "shifted_conjugate_sup_oracle",
    "shifted_conjugate_sup_batch",
    "check_product_inequality",
    "sandwich_ratios",
    "product_split_bound",
    "fit_product_split_constant",
    "check_generalized_poincare",
    "two_point_inequality_constant",
    "p_power_difference_constant",
    "constants_report",
    "write_constants_report",
]


def constants_report(inequality: str, p: float, empirical_constant: float,
                     grid_points: int, M: Optional[float] = None,
                     eta: Optional[float] = None) -> dict:
    """Schema of one empirical-constant record."""
    out = {"inequality": inequality, "p": p,
           "empirical_constant": empirical_constant, "grid_points": grid_points}
    if M is not None:
        out["M"] = M
    if eta is not None:
        out["eta"] = eta
    return out


def write_constants_report(path, reports: list) -> None:
    with open(path, "w") as fh:
        json.dump(reports, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class PExponent:
    """Integrability exponent p with its conjugate q and the bootstrap ratio
    theta = (p-2)/p (only meaningful for p > 2)."""

    p: float

    def __post_init__(self):
        if not (self.p > 1) or not math.isfinite(self.p):
            raise ValueError("p must be a finite real > 1")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def theta(self) -> float:
        return (self.p - 2.0) / self.p


def _require_p12(p: float):
    if not (1.0 < p < 2.0):
        raise ValueError("the shifted power pair is defined for 1 < p < 2")


def shifted_gradient(y, p: float):
    """sgn(y)[(|y|+1)^(p-1) - 1], odd and increasing."""
    _require_p12(p)
    y = np.asarray(y, dtype=float)
    # expm1/log1p form stays accurate for |y| << 1
    out = np.sign(y) * np.expm1((p - 1.0) * np.log1p(np.abs(y)))
    return out if out.ndim else float(out)


def shifted_gradient_prime(y, p: float):
    """(p-1)(|y|+1)^(p-2); bounded by p-1, even."""
    _require_p12(p)
    y = np.asarray(y, dtype=float)
    out = (p - 1.0) * (np.abs(y) + 1.0) ** (p - 2.0)
    return out if out.ndim else float(out)


def shifted_potential(y, p: float):
    """[(|y|+1)^p - 1]/p - |y|, even and convex with quadratic floor."""
    _require_p12(p)
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    # near 0 the leading terms cancel to (p-1)/2 y^2; expm1 keeps them
    out = np.expm1(p * np.log1p(a)) / p - a
    return out if out.ndim else float(out)


def shifted_gradient_inverse(b, p: float):
    """Inverse of the shifted gradient: sgn(b)[(|b|+1)^(1/(p-1)) - 1]."""
    _require_p12(p)
    b = np.asarray(b, dtype=float)
    out = np.sign(b) * np.expm1(np.log1p(np.abs(b)) / (p - 1.0))
    return out if out.ndim else float(out)


def shifted_conjugate(b, p: float):
    """Convex conjugate of the shifted potential, in closed form.

    The sup in sup_y (b y - potential(y)) is attained at y* = gradient^{-1}(b),
    so conjugate(b) = b y* - potential(y*); even in b, zero at zero, convex.
    """
    _require_p12(p)
    b = np.asarray(b, dtype=float)
    a = np.abs(b)
    ystar = np.expm1(np.log1p(a) / (p - 1.0))
    out = a * ystar - (np.expm1(p * np.log1p(ystar)) / p - ystar)
    return out if out.ndim else float(out)


def shifted_conjugate_sup_oracle(b: float, p: float, y_max: float = 100.0,
                                 n: int = 1_000_000) -> float:
    """Brute-force sup_y (b y - potential(y)) over a dense symmetric grid.

    Slow; kept as the independent cross-check of the closed form.
    """
    _require_p12(p)
    y = np.linspace(-y_max, y_max, n)
    return float(np.max(b * y - shifted_potential(y, p)))


def shifted_conjugate_sup_batch(bs: np.ndarray, p: float, y_max: float = 100.0,
                                n: int = 1_000_000) -> np.ndarray:
    """Batched grid-scan oracle: one brute-force sup per entry of ``bs``."""
    _require_p12(p)
    y = np.linspace(-y_max, y_max, n)
    pot = shifted_potential(y, p)
    return _kernels.conjugate_sup_batch(np.asarray(bs, dtype=float), y, pot)


def check_product_inequality(p: float, n_samples: int = 100_000, seed: int = 0,
                             tol: float = 1e-12) -> int:
    """Count violations of |ab| <= potential(|a|) + conjugate(|b|).

    Samples log-uniform magnitudes over [1e-6, 1e6] with random signs, plus
    the touching pairs b = gradient(a) where equality holds.
    """
    _require_p12(p)
    rng = np.random.default_rng(seed)
    a = 10.0 ** rng.uniform(-6, 6, n_samples) * rng.choice([-1.0, 1.0], n_samples)
    b = 10.0 ** rng.uniform(-6, 6, n_samples) * rng.choice([-1.0, 1.0], n_samples)
    lhs = np.abs(a * b)
    rhs = shifted_potential(a, p) + shifted_conjugate(b, p)
    viol = int(np.sum(lhs > rhs * (1 + tol) + tol))
    # touching family: equality up to roundoff
    at = 10.0 ** rng.uniform(-6, 6, 1000)
    bt = shifted_gradient(at, p)
    lhs_t = np.abs(at * bt)
    rhs_t = shifted_potential(at, p) + shifted_conjugate(bt, p)
    viol += int(np.sum(lhs_t > rhs_t * (1 + 1e-9) + tol))
    return viol


_SANDWICH_KINDS = ("potential", "conjugate", "gradient_mix")


def sandwich_ratios(kind: str, p: float, n_grid: int = 2000) -> tuple[float, float]:
    """(inf, sup) over a log grid y in [1e-8, 1e8] of the two-scale envelope
    ratios:

    * ``potential``    : potential(y) / min(y^2, y^p)
    * ``conjugate``    : conjugate(b) / max(b^2, b^(p/(p-1)))
    * ``gradient_mix`` : max(g(y)^2, g(y)^(p/(p-1))) / min(y^2, y^p)
    """
    _require_p12(p)
    if kind not in _SANDWICH_KINDS:
        raise ValueError(f"kind must be one of {_SANDWICH_KINDS}")
    y = np.geomspace(1e-8, 1e8, n_grid)
    q = p / (p - 1.0)
    if kind == "potential":
        r = shifted_potential(y, p) / np.minimum(y**2, y**p)
    elif kind == "conjugate":
        r = shifted_conjugate(y, p) / np.maximum(y**2, y**q)
    else:
        g = shifted_gradient(y, p)
        r = np.maximum(g**2, g**q) / np.minimum(y**2, y**p)
    return float(np.min(r)), float(np.max(r))


def product_split_bound(a, y, eta: float, p: float, direction: str):
    """One product-split inequality instance: returns (lhs, rhs_unit) where
    the inequality reads lhs <= C * rhs_unit for an a-,y-,eta-independent C.

    ``direction="small"`` uses the split  potential(a)/eta^2 + eta^2 potential(y);
    ``direction="large"`` uses            eta^p potential(a) + potential(y)/eta^q.
    """
    _require_p12(p)
    if not (0 < eta < 1):
        raise ValueError("eta must lie in (0, 1)")
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    lhs = np.abs(a * shifted_gradient(y, p))
    if direction == "small":
        rhs = shifted_potential(a, p) / eta**2 + eta**2 * shifted_potential(y, p)
    elif direction == "large":
        q = p / (p - 1.0)
        rhs = eta**p * shifted_potential(a, p) + shifted_potential(y, p) / eta**q
    else:
        raise ValueError("direction must be 'small' or 'large'")
    return lhs, rhs


def fit_product_split_constant(p: float, direction: str, eta: float,
                               n_grid: int = 200) -> float:
    """Minimal C for the product-split inequality at one eta, fitted over a
    sign-symmetrized log grid of (a, y) pairs."""
    vals = np.geomspace(1e-6, 1e6, n_grid)
    grid = np.concatenate([-vals[::-1], vals])
    A, Y = np.meshgrid(grid, grid, indexing="ij")
    lhs, rhs = product_split_bound(A.ravel(), Y.ravel(), eta, p, direction)
    mask = rhs > 0
    return float(np.max(lhs[mask] / rhs[mask]))


def check_generalized_poincare(z_nodes: np.ndarray, p: float) -> tuple[float, float, float]:
    """Poincare-type ratio for the shifted potential on a profile with z(0)=0.

    The profile is piecewise linear on a uniform grid over [0, 1].  Returns
    (integral of potential(z), integral of potential(z') cellwise, their
    ratio); the ratio is NaN for the zero profile.
    """
    _require_p12(p)
    z = np.asarray(z_nodes, dtype=float)
    if abs(z[0]) > 1e-14:
        raise ValueError("profile must vanish at x = 0")
    n = z.size - 1
    dx = 1.0 / n
    w = np.full(n + 1, dx)
    w[0] = w[-1] = 0.5 * dx
    lhs = float(np.sum(w * shifted_potential(z, p)))
    zprime = np.diff(z) / dx
    rhs = float(np.sum(shifted_potential(zprime, p)) * dx)
    if rhs == 0.0:
        if lhs > 0.0:
            raise ValueError("zero derivative with nonzero profile is impossible")
        return lhs, rhs, float("nan")
    return lhs, rhs, lhs / rhs


def two_point_inequality_constant(p: float, M: float, n_grid: int = 1000) -> float:
    """Empirical sup of potential(r - s) over the two-point comparison bound

        M^{-p} (potential(r) + potential(s)) + M^{2-p} (r - s)(grad(r) - grad(s))

    for (r, s) on a sign-symmetric log grid in [-1e4, 1e4], diagonal excluded.
    """
    _require_p12(p)
    if M < 1:
        raise ValueError("M must be >= 1")
    vals = np.geomspace(1e-4, 1e4, n_grid // 2)
    grid = np.concatenate([-vals[::-1], vals])
    return _kernels.two_point_sup(grid, p, float(M))


def p_power_difference_constant(p: float, n_grid: int = 1000) -> float:
    """Empirical sup of |a-b|^p / ((a-b)(sgn(a)|a|^{p-1} - sgn(b)|b|^{p-1}))
    for p > 2 over a sign-symmetric log grid, diagonal excluded."""
    if not (p > 2):
        raise ValueError("this comparison requires p > 2")
    vals = np.geomspace(1e-4, 1e4, n_grid // 2)
    grid = np.concatenate([-vals[::-1], vals, [0.0]])
    A, B = np.meshgrid(grid, grid, indexing="ij")
    a = A.ravel()
    b = B.ravel()
    mask = a != b
    a, b = a[mask], b[mask]
    num = np.abs(a - b) ** p
    den = (a - b) * (np.sign(a) * np.abs(a) ** (p - 1.0) - np.sign(b) * np.abs(b) ** (p - 1.0))
    return float(np.max(num / den))
