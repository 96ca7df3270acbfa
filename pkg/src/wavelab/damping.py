"""Damping nonlinearities, the damping-coefficient profile, and smooth cutoffs.

Three preset nonlinearity families are supported.  Each is odd, increasing,
globally Lipschitz, vanishes at the origin, and grows at least linearly at
infinity:

* ``linear``      : g(s) = slope * s
* ``polynomial``  : g(s) = alpha * sgn(s)|s|^q on |s| <= 1, alpha * s beyond
* ``expflat``     : g(s) = alpha * sgn(s) exp(-alpha/|s|^q) on 0 < |s| <= 1,
                    linearly continued beyond 1; all derivatives vanish at 0.

The polynomial and expflat presets saturate to a linear profile past |s| = 1
so the two-sided sector condition  alpha_inf |s| <= |g(s)| <= beta |s|  holds
exactly for |s| >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "DampingKind",
    "OriginBehavior",
    "DampingSpec",
    "CoefficientProfile",
    "CutoffSet",
    "eval_g",
    "eval_g0",
    "eval_h",
    "g0_inverse",
    "classify_origin",
    "eval_cutoffs",
    "smooth_bridge",
    "smooth_bridge_prime",
    "default_cutoffs",
]


class DampingKind(Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    EXPFLAT = "expflat"


class OriginBehavior(Enum):
    POSITIVE_DERIVATIVE = "positive_derivative"
    ZERO_DERIVATIVE = "zero_derivative"


def _expflat_sector_upper(q: float, alpha: float) -> float:
    # sup of g(s)/s on (0,1]; the ratio peaks at s = (alpha*q)^(1/q) if that
    # lies inside (0,1), otherwise at s=1.
    s_peak = (alpha * q) ** (1.0 / q)
    cands = [alpha * math.exp(-alpha)]
    if s_peak < 1.0:
        cands.append(alpha * math.exp(-alpha / s_peak**q) / s_peak)
    return max(cands)


@dataclass(frozen=True)
class DampingSpec:
    """Immutable description of one damping nonlinearity.

    ``lipschitz_bound`` and ``linear_lower_at_infinity`` are the sector
    constants: |g(s)| <= lipschitz_bound * |s| everywhere and
    |g(s)| >= linear_lower_at_infinity * |s| for |s| >= 1.
    ``eta`` is the right end of the interval (0, eta] on which the secant
    ratio g0(s)/s is nondecreasing.
    """

    kind: DampingKind
    slope: float = 1.0
    q: float = 1.0
    alpha: float = 1.0
    eta: float = 1.0
    lipschitz_bound: float = field(init=False, default=0.0)
    linear_lower_at_infinity: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.kind is DampingKind.LINEAR:
            if not (self.slope > 0):
                raise ValueError("linear damping needs slope > 0")
            beta = lo = self.slope
        elif self.kind is DampingKind.POLYNOMIAL:
            if not (self.q >= 1):
                raise ValueError("polynomial damping needs q >= 1")
            if not (self.alpha > 0):
                raise ValueError("polynomial damping needs alpha > 0")
            beta = lo = self.alpha
        else:
            if not (self.q > 0 and self.alpha > 0):
                raise ValueError("expflat damping needs q > 0 and alpha > 0")
            beta = _expflat_sector_upper(self.q, self.alpha)
            lo = self.alpha * math.exp(-self.alpha)
        if not (0 < self.eta <= 1):
            raise ValueError("eta must lie in (0, 1]")
        if self.kind is DampingKind.EXPFLAT:
            # g0/s increases only up to (alpha*q)^(1/q)
            s_peak = (self.alpha * self.q) ** (1.0 / self.q)
            if self.eta > s_peak + 1e-12:
                raise ValueError(
                    f"expflat secant ratio stops increasing at {s_peak:.6g} < eta"
                )
        object.__setattr__(self, "lipschitz_bound", beta)
        object.__setattr__(self, "linear_lower_at_infinity", lo)

    @classmethod
    def linear(cls, slope: float = 1.0) -> "DampingSpec":
        return cls(DampingKind.LINEAR, slope=slope)

    @classmethod
    def polynomial(cls, q: float, alpha: float = 1.0, eta: float = 1.0) -> "DampingSpec":
        return cls(DampingKind.POLYNOMIAL, q=q, alpha=alpha, eta=eta)

    @classmethod
    def expflat(cls, q: float, alpha: float = 1.0, eta: float = 1.0) -> "DampingSpec":
        return cls(DampingKind.EXPFLAT, q=q, alpha=alpha, eta=eta)

    def kernel_params(self) -> tuple[int, float, float]:
        """(kind code, c1, c2) triple consumed by the jitted/vectorized kernels."""
        if self.kind is DampingKind.LINEAR:
            return 0, self.slope, 0.0
        code = 1 if self.kind is DampingKind.POLYNOMIAL else 2
        return code, self.q, self.alpha


def eval_g(spec: DampingSpec, s):
    """Damping nonlinearity g(s); accepts scalars or arrays."""
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("g requires finite arguments")
    if spec.kind is DampingKind.LINEAR:
        out = spec.slope * s
    elif spec.kind is DampingKind.POLYNOMIAL:
        a = np.abs(s)
        out = np.where(a <= 1.0, spec.alpha * np.sign(s) * a**spec.q, spec.alpha * s)
    else:
        a = np.abs(s)
        safe = np.where(a > 0, a, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            core = spec.alpha * np.sign(s) * np.exp(-spec.alpha / safe**spec.q)
        out = np.where(a <= 1.0, np.where(a > 0, core, 0.0),
                       spec.alpha * math.exp(-spec.alpha) * s)
    return out if out.ndim else float(out)


def eval_g0(spec: DampingSpec, s):
    """Comparison function g0 on [-1, 1] (odd, increasing, |g0| <= |g| there)."""
    s = np.asarray(s, dtype=float)
    if np.any(np.abs(s) > 1.0 + 1e-12):
        raise ValueError("g0 is only defined on [-1, 1]")
    return eval_g(spec, s)  # the presets take g = g0 on [-1, 1]


def eval_h(spec: DampingSpec, s):
    """Secant ratio g0(s)/s of the damping near the origin, for 0 < s <= 1."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0) or np.any(s > 1.0 + 1e-12):
        raise ValueError("the secant ratio is defined for 0 < s <= 1")
    if spec.kind is DampingKind.LINEAR:
        out = np.full_like(s, spec.slope)
    elif spec.kind is DampingKind.POLYNOMIAL:
        out = spec.alpha * s ** (spec.q - 1.0)
    else:
        out = spec.alpha * np.exp(-spec.alpha / s**spec.q) / s
    return out if out.ndim else float(out)


def g0_inverse(spec: DampingSpec, y):
    """Inverse of g0 on [0, g0(1)]; used by the decay-rate growth bounds."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("g0_inverse expects nonnegative arguments")
    if spec.kind is DampingKind.LINEAR:
        out = y / spec.slope
    elif spec.kind is DampingKind.POLYNOMIAL:
        out = (y / spec.alpha) ** (1.0 / spec.q)
    else:
        # y = alpha exp(-alpha/s^q)  =>  s = (alpha / log(alpha/y))^(1/q)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(y > 0, (spec.alpha / np.log(spec.alpha / np.where(y > 0, y, 1.0))) ** (1.0 / spec.q), 0.0)
    return out if out.ndim else float(out)


def classify_origin(spec: DampingSpec) -> OriginBehavior:
    """Whether g has positive or vanishing derivative at the origin."""
    if spec.kind is DampingKind.LINEAR:
        return OriginBehavior.POSITIVE_DERIVATIVE
    if spec.kind is DampingKind.POLYNOMIAL and spec.q == 1.0:
        return OriginBehavior.POSITIVE_DERIVATIVE
    return OriginBehavior.ZERO_DERIVATIVE


@dataclass(frozen=True)
class CoefficientProfile:
    """Continuous damping coefficient a(x): a0 on omega=(b, c), linear ramps
    of width ``ramp`` on each side, zero elsewhere."""

    b: float = 0.25
    c: float = 0.75
    a0: float = 1.0
    ramp: float = 0.0625

    def __post_init__(self):
        if not (0.0 <= self.b < self.c <= 1.0):
            raise ValueError("need 0 <= b < c <= 1")
        if self.a0 < 0:
            raise ValueError("a0 must be nonnegative")
        if self.ramp < 0 or self.b - self.ramp < -1e-12 or self.c + self.ramp > 1 + 1e-12:
            raise ValueError("ramps must fit inside [0, 1]")

    @classmethod
    def zero(cls) -> "CoefficientProfile":
        return cls(b=0.25, c=0.75, a0=0.0, ramp=0.0)

    @property
    def omega(self) -> tuple[float, float]:
        return (self.b, self.c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= self.b) & (x <= self.c), self.a0, 0.0)
        if self.ramp > 0:
            up = (x > self.b - self.ramp) & (x < self.b)
            out = np.where(up, self.a0 * (x - (self.b - self.ramp)) / self.ramp, out)
            dn = (x > self.c) & (x < self.c + self.ramp)
            out = np.where(dn, self.a0 * ((self.c + self.ramp) - x) / self.ramp, out)
        return out if out.ndim else float(out)

    def sample(self, x_nodes: np.ndarray) -> np.ndarray:
        return np.asarray(self(x_nodes), dtype=float)


def smooth_bridge(x):
    """C-infinity monotone bridge: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    lo = np.exp(-1.0 / np.where(x > 0, x, 1.0), where=x > 0, out=np.zeros_like(x))
    hi = np.exp(-1.0 / np.where(1 - x > 0, 1 - x, 1.0), where=1 - x > 0,
                out=np.zeros_like(x))
    with np.errstate(invalid="ignore"):
        out = np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, lo / (lo + hi)))
    return out if out.ndim else float(out)


def smooth_bridge_prime(x):
    """Derivative of the smooth bridge (zero outside (0, 1))."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    a = np.exp(-1.0 / xs)
    b = np.exp(-1.0 / (1 - xs))
    da = a / xs**2
    db = b / (1 - xs) ** 2
    out = np.where(inside, (da * b + a * db) / (a + b) ** 2, 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CutoffSet:
    """Three nested smooth cutoffs on [0, 1] built from eight interior points
    p0 < p1 < p2 < p3 < p4 < p5 < p6 < p7.

    * ``psi1`` is 1 outside (p2, p5) and 0 on [p3, p4] (an inverted bump),
    * ``psi2`` is supported on (p1, p6) and equals 1 on [p2, p5],
    * ``psi3`` is supported on (p0, p7) and equals 1 on [p1, p6].

    ``transition_order`` records the smoothness of the bridges; the
    exponential bridge used here is infinitely differentiable.
    """

    points: tuple[float, ...]
    transition_order: float = math.inf

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) != 8 or any(pts[i] >= pts[i + 1] for i in range(7)):
            raise ValueError("need 8 strictly increasing cut points")
        if pts[0] <= 0 or pts[-1] >= 1:
            raise ValueError("cut points must lie inside (0, 1)")
        object.__setattr__(self, "points", pts)

    def psi1(self, x):
        p = self.points
        x = np.asarray(x, dtype=float)
        down = 1.0 - smooth_bridge((x - p[2]) / (p[3] - p[2]))
        up = smooth_bridge((x - p[4]) / (p[5] - p[4]))
        out = np.where(x < p[3], down, np.where(x > p[4], up, 0.0))
        # outside the bump region both branches evaluate to 1 as they should
        return out if out.ndim else float(out)

    def psi2(self, x):
        p = self.points
        return self._bump(x, p[1], p[2], p[5], p[6])

    def psi3(self, x):
        p = self.points
        return self._bump(x, p[0], p[1], p[6], p[7])

    @staticmethod
    def _bump(x, lo0, lo1, hi1, hi0):
        x = np.asarray(x, dtype=float)
        up = smooth_bridge((x - lo0) / (lo1 - lo0))
        down = 1.0 - smooth_bridge((x - hi1) / (hi0 - hi1))
        out = np.where(x < lo1, up, np.where(x > hi1, down, 1.0))
        return out if out.ndim else float(out)

    def psi1_prime(self, x):
        p = self.points
        x = np.asarray(x, dtype=float)
        down = -smooth_bridge_prime((x - p[2]) / (p[3] - p[2])) / (p[3] - p[2])
        up = smooth_bridge_prime((x - p[4]) / (p[5] - p[4])) / (p[5] - p[4])
        out = np.where(x < p[3], down, np.where(x > p[4], up, 0.0))
        return out if out.ndim else float(out)

    def psi2_prime(self, x):
        p = self.points
        return self._bump_prime(x, p[1], p[2], p[5], p[6])

    def psi3_prime(self, x):
        p = self.points
        return self._bump_prime(x, p[0], p[1], p[6], p[7])

    @staticmethod
    def _bump_prime(x, lo0, lo1, hi1, hi0):
        x = np.asarray(x, dtype=float)
        up = smooth_bridge_prime((x - lo0) / (lo1 - lo0)) / (lo1 - lo0)
        down = -smooth_bridge_prime((x - hi1) / (hi0 - hi1)) / (hi0 - hi1)
        out = np.where(x < lo1, up, np.where(x > hi1, down, 0.0))
        return out if out.ndim else float(out)

    def psi3_coefficient_bound(self, profile: CoefficientProfile, n_probe: int = 2001) -> float:
        """Smallest C with psi3 <= C * a on a probe grid (the support of psi3
        must sit inside the region where a >= a0 > 0)."""
        p = self.points
        x = np.linspace(p[0], p[7], n_probe)
        a = profile.sample(x)
        psi = self.psi3(x)
        mask = psi > 0
        if np.any(a[mask] <= 0):
            raise ValueError("psi3 support exceeds the damped region")
        return float(np.max(psi[mask] / a[mask]))


def default_cutoffs() -> CutoffSet:
    """Cut points nested inside the default damped region (0.25, 0.75)."""
    return CutoffSet(points=(0.30, 0.34, 0.38, 0.42, 0.58, 0.62, 0.66, 0.70))


def eval_cutoffs(cut: CutoffSet, x) -> tuple:
    """(psi1, psi2, psi3) evaluated at x."""
    return cut.psi1(x), cut.psi2(x), cut.psi3(x)
