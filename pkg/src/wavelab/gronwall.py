"""Numerical checkers for the Gronwall-type integral inequalities that
convert dissipation bounds into pointwise decay, and the bootstrap exponent
recursion whose fixed point gives the near-optimal rate.

A test function is a sampled nonincreasing series plus an analytic tail
model (power or exponential) so the improper integrals from any grid time
to infinity can be evaluated without truncation bias.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SampledDecayFn",
    "GronwallVerdict",
    "check_decay_inequality",
    "check_weighted_decay_inequality",
    "check_three_term_inequality",
    "bootstrap_exponents",
]


@dataclass(frozen=True)
class SampledDecayFn:
    """Nonincreasing samples with an analytic tail beyond the last grid time.

    ``tail`` is ("power", gamma) meaning f(t) = f_N ((1+t_N)/(1+t))^gamma for
    t >= t_N, or ("exp", rate) meaning f(t) = f_N exp(-rate (t - t_N)).
    """

    t: np.ndarray
    f: np.ndarray
    tail: tuple = ("power", 2.0)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("need an increasing time grid")
        if f.shape != t.shape or np.any(f < 0):
            raise ValueError("need nonnegative samples on the same grid")
        if np.any(np.diff(f) > 1e-12 * max(f[0], 1e-300)):
            raise ValueError("samples must be nonincreasing")
        kind, par = self.tail
        if kind not in ("power", "exp") or par <= 0:
            raise ValueError("tail must be ('power', gamma>0) or ('exp', rate>0)")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f", f)

    def tail_integral(self, k: float) -> float:
        """integral_{t_N}^inf f(tau)^k d tau under the tail model."""
        fN = float(self.f[-1])
        if fN == 0.0:
            return 0.0
        kind, par = self.tail
        if kind == "exp":
            return fN**k / (k * par)
        if k * par <= 1.0:
            raise ValueError("tail power integral diverges (k*gamma <= 1)")
        return fN**k * (1.0 + float(self.t[-1])) / (k * par - 1.0)

    def right_integrals(self, k: float) -> np.ndarray:
        """R_i = integral_{t_i}^inf f^k (grid trapezoid + analytic tail)."""
        fk = self.f**k
        seg = 0.5 * (fk[:-1] + fk[1:]) * np.diff(self.t)
        rev = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        return rev + self.tail_integral(k)


@dataclass
class GronwallVerdict:
    hypothesis_holds: bool
    first_violation_t: Optional[float]
    conclusion_exponent: float
    fitted_constant: float
    conclusion_bounded: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(out["fitted_constant"]):
            out["fitted_constant"] = None
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


_REL_SLACK = 1e-7  # absorbs trapezoid noise in the inequality comparisons


def _fit_decay_constant(x: np.ndarray, f: np.ndarray, exponent: float) -> float:
    """Minimal C with f(t) <= C f(0) / (1+x)^exponent on the samples."""
    f0 = float(f[0])
    if f0 == 0.0:
        return 0.0
    return float(np.max(f * (1.0 + x) ** exponent) / f0)


def check_decay_inequality(fn: SampledDecayFn, sigma: float, sigma_prime: float,
                      c: float) -> GronwallVerdict:
    """Power-weighted integral inequality checker.

    Hypothesis: for all grid t,
        integral_t^inf f^{1+sigma} <= c f(t)^{1+sigma}
                                      + c (1+t)^{-sigma'} f(0)^sigma f(t).
    When it holds, fits the minimal C in the conclusion
        f(t) <= C f(0) / (1+t)^{(1+sigma')/sigma}.
    """
    if sigma <= 0 or sigma_prime <= 0 or c <= 0:
        raise ValueError("sigma, sigma', c must be positive")
    R = fn.right_integrals(1.0 + sigma)
    f0 = float(fn.f[0])
    rhs = c * fn.f ** (1.0 + sigma) + c * (1.0 + fn.t) ** (-sigma_prime) * f0**sigma * fn.f
    bad = R > rhs * (1.0 + _REL_SLACK) + 1e-300
    expo = (1.0 + sigma_prime) / sigma
    if np.any(bad):
        return GronwallVerdict(False, float(fn.t[np.argmax(bad)]), expo, math.inf)
    return GronwallVerdict(True, None, expo, _fit_decay_constant(fn.t, fn.f, expo))


def check_weighted_decay_inequality(fn: SampledDecayFn, phi: Callable, sigma: float,
                      sigma_prime: float, c: float) -> GronwallVerdict:
    """Weighted-time variant: time is rescaled through an increasing phi with
    phi(0) = 0, and the decay is measured against (1 + phi(t)).

    The tail model of ``fn`` is interpreted in the phi variable.  With
    phi(t) = t this reduces exactly to ``check_decay_inequality``.
    """
    x = np.asarray(phi(fn.t), dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("phi must be increasing on the sample grid")
    rescaled = SampledDecayFn(t=x, f=fn.f, tail=fn.tail)
    R = rescaled.right_integrals(1.0 + sigma)
    f0 = float(fn.f[0])
    rhs = c * fn.f ** (1.0 + sigma) + c * (1.0 + x) ** (-sigma_prime) * f0**sigma * fn.f
    bad = R > rhs * (1.0 + _REL_SLACK) + 1e-300
    expo = (1.0 + sigma_prime) / sigma
    if np.any(bad):
        return GronwallVerdict(False, float(fn.t[np.argmax(bad)]), expo, math.inf)
    return GronwallVerdict(True, None, expo, _fit_decay_constant(x, fn.f, expo))


def check_three_term_inequality(fn: SampledDecayFn, p: float, c: float,
                     delta: float = 0.25) -> GronwallVerdict:
    """Three-term integral inequality for p > 2 and its bootstrap conclusion.

    Hypothesis: integral_t^inf f^2 <= c f^2 + c f^{1+theta}/(1+t)
                                      + c f/(1+t)^{p-1},  theta = (p-2)/p.
    Conclusion: f(t) (1+t)^{p-delta} stays bounded; the sup over the grid is
    returned, and ``conclusion_bounded`` is False when the weighted series is
    still growing at the end of the grid (the signature of a function too
    slow for the claimed rate).
    """
    if not (p > 2):
        raise ValueError("this inequality requires p > 2")
    theta = (p - 2.0) / p
    R = fn.right_integrals(2.0)
    rhs = (c * fn.f**2
           + c * fn.f ** (1.0 + theta) / (1.0 + fn.t)
           + c * fn.f / (1.0 + fn.t) ** (p - 1.0))
    bad = R > rhs * (1.0 + _REL_SLACK) + 1e-300
    expo = p - delta
    weighted = fn.f * (1.0 + fn.t) ** expo
    f0 = float(fn.f[0])
    bound = float(np.max(weighted) / f0) if f0 > 0 else 0.0
    growing = bool(weighted[-1] > 2.0 * weighted[0]
                   and weighted[-1] >= 0.95 * np.max(weighted))
    if np.any(bad):
        return GronwallVerdict(False, float(fn.t[np.argmax(bad)]), expo,
                               math.inf, conclusion_bounded=not growing)
    return GronwallVerdict(True, None, expo, bound, conclusion_bounded=not growing)


def bootstrap_exponents(p: float, n_stages: int, m: int = 1) -> dict:
    """Exponent recursion e_0 = 2m, e_{k+1} = 2m + theta e_k with
    theta = (p-2)/p; the fixed point is m*p.

    Returns the stage sequence, the ratio theta, and the fixed point.
    """
    if not (p > 2):
        raise ValueError("the bootstrap requires p > 2")
    if n_stages < 0 or m < 1:
        raise ValueError("need n_stages >= 0 and m >= 1")
    theta = (p - 2.0) / p
    seq = np.empty(n_stages + 1)
    seq[0] = 2.0 * m
    for k in range(n_stages):
        seq[k + 1] = 2.0 * m + theta * seq[k]
    return {"stages": seq, "theta": theta, "limit": m * p}
