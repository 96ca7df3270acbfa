"""Concave time-weight family driven by the damping's small-signal profile.

For an integer strength ``m`` and threshold ``eta``, the family is built
from the secant ratio  h(s) = g0(s)/s  of the damping:

    accum(s)   = integral_0^s ds' / h( (s' + A)^(-m) ),    A = eta^(-1/m)
    phi(t)     = accum^{-1}(t)          (increasing, concave)
    phi'(t)    = h( (phi(t) + A)^(-m) )
    eps(t)     = (phi(t) + A)^(-m)      (decreasing from eta to 0)

``accum`` is tabulated by adaptive Simpson quadrature on a geometric grid
and inverted with a shape-preserving monotone cubic.  phi' and eps use the
closed-form relations above, so the improper weighted integrals

    integral_S^inf phi'(t) eps(t)^k dt = 1 / [(km-1) (phi(S)+A)^(km-1)]

hold exactly in the continuum and serve as a strong cross-check of the
tabulation (see ``closed_form_integral_check``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field


import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import PchipInterpolator

from .damping import DampingKind, DampingSpec, eval_h

__all__ = [
    "HypothesisViolationError",
    "WeightFamily",
    "build_weight_family",
    "closed_form_integral_check",
    "growth_bound_check",
    "t_m_value",
    "accum_closed_form",
]


class HypothesisViolationError(ValueError):
    pass


def _h_scalar(spec: DampingSpec, s: float) -> float:
    # scalar secant ratio, hot path of the tabulation
    if spec.kind is DampingKind.LINEAR:
        return spec.slope
    if spec.kind is DampingKind.POLYNOMIAL:
        return spec.alpha * s ** (spec.q - 1.0)
    return spec.alpha * math.exp(-spec.alpha / s**spec.q) / s


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, rel_tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= rel_tol * abs(left + right) + 1e-300:
        return left + right + (left + right - whole) / 15.0
    return (_adaptive_simpson(f, a, m, fa, flm, fm, left, rel_tol, depth - 1)
            + _adaptive_simpson(f, m, b, fm, frm, fb, right, rel_tol, depth - 1))


def _simpson(f, a, b, rel_tol=1e-12, depth=30):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _adaptive_simpson(f, a, b, fa, fm, fb, whole, rel_tol, depth)


@dataclass
class WeightFamily:
    """Tabulated weight family; immutable after construction."""

    m: int
    eta: float
    damping: DampingSpec
    s_tab: np.ndarray
    accum_tab: np.ndarray
    _phi: PchipInterpolator = field(repr=False)
    _accum: PchipInterpolator = field(repr=False)

    @property
    def A(self) -> float:
        return self.eta ** (-1.0 / self.m)

    @property
    def s_max(self) -> float:
        return float(self.s_tab[-1])

    @property
    def t_max(self) -> float:
        return float(self.accum_tab[-1])

    def psi(self, s):
        """Tabulated accumulator (the inverse of phi)."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > self.s_max):
            raise ValueError("argument outside the tabulated range")
        out = self._accum(s)
        return out if out.ndim else float(out)

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max):
            raise ValueError(f"time outside the tabulated range [0, {self.t_max:.3g}]")
        out = self._phi(t)
        return out if out.ndim else float(out)

    def phi_prime(self, t):
        """Closed form through the construction: h applied to eps(t)."""
        e = self.eps(t)
        out = np.asarray(eval_h(self.damping, e), dtype=float)
        return out if out.ndim else float(out)

    def eps(self, t):
        """Decreasing gap threshold (phi(t) + A)^(-m); eps(0) = eta."""
        ph = np.asarray(self.phi(t), dtype=float)
        out = (ph + self.A) ** (-float(self.m))
        return out if out.ndim else float(out)

    @property
    def t_m(self) -> float:
        return t_m_value(self.m, self.eta, self.damping)

    @property
    def label(self) -> str:
        return f"phi[m={self.m},eta={self.eta:g}]"

    def write_tables(self, accum_path, weight_path, n_t: int = 400) -> None:
        """Dump the tabulated accumulator (s, psi_m) and the derived weight
        evaluators (t, phi_m, phi_m_prime, eps_m) on a geometric t grid."""
        with open(accum_path, "w", newline="") as fh:
            fh.write("s,psi_m\n")
            for s_val, a_val in zip(self.s_tab, self.accum_tab):
                fh.write(f"{s_val:.17g},{a_val:.17g}\n")
        t = np.concatenate([[0.0], np.geomspace(1e-3, self.t_max, n_t - 1)])
        phi = np.asarray(self.phi(t))
        phi_p = np.asarray(self.phi_prime(t))
        eps = np.asarray(self.eps(t))
        with open(weight_path, "w", newline="") as fh:
            fh.write("t,phi_m,phi_m_prime,eps_m\n")
            for row in zip(t, phi, phi_p, eps):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def build_weight_family(m: int, eta: float, damping: DampingSpec,
                        s_max: float = 1e6, t_cap: float = 1e12,
                        nodes_per_decade: int = 1200,
                        probe_hypothesis: bool = True) -> WeightFamily:
    """Tabulate one weight family.

    The s-grid is geometric up to ``s_max``, truncated early once the
    accumulated time passes ``t_cap`` (the exp-flat profile makes the
    accumulator grow exponentially, so a modest s range already covers any
    practical horizon).  Raises HypothesisViolationError when the damping's
    secant ratio fails to be nondecreasing on (0, eta].
    """
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    if not (0 < eta <= damping.eta):
        raise ValueError("eta must lie in (0, damping.eta]")
    if probe_hypothesis:
        sp = np.geomspace(1e-6 * eta, eta, 200)
        hv = np.asarray([_h_scalar(damping, s) for s in sp])
        if np.any(np.diff(hv) < -1e-10 * np.maximum(hv[:-1], 1e-300)):
            raise HypothesisViolationError(
                "secant ratio g0(s)/s decreases on (0, eta]")
    m = int(m)
    A = eta ** (-1.0 / m)

    def integrand(sigma: float) -> float:
        return 1.0 / _h_scalar(damping, (sigma + A) ** (-m))

    decades = int(math.ceil(math.log10(s_max) - math.log10(1e-3)))
    ladder = np.geomspace(1e-3, s_max, decades * nodes_per_decade + 1)
    s_nodes = [0.0]
    acc_nodes = [0.0]
    prev = 0.0
    total = 0.0
    for s in ladder:
        total += _simpson(integrand, prev, s)
        s_nodes.append(float(s))
        acc_nodes.append(total)
        prev = float(s)
        if total > t_cap:
            break
    s_tab = np.asarray(s_nodes)
    accum_tab = np.asarray(acc_nodes)
    if np.any(np.diff(accum_tab) <= 0):
        raise HypothesisViolationError("accumulator failed to be increasing")
    phi = PchipInterpolator(accum_tab, s_tab, extrapolate=False)
    accum = PchipInterpolator(s_tab, accum_tab, extrapolate=False)
    return WeightFamily(m=m, eta=eta, damping=damping, s_tab=s_tab,
                        accum_tab=accum_tab, _phi=phi, _accum=accum)


def accum_closed_form(damping: DampingSpec, m: int, eta: float, s):
    """Closed-form accumulator for the linear and polynomial presets
    (independent cross-check of the tabulation)."""
    s = np.asarray(s, dtype=float)
    A = eta ** (-1.0 / m)
    if damping.kind is DampingKind.LINEAR:
        out = s / damping.slope
    elif damping.kind is DampingKind.POLYNOMIAL:
        k = m * (damping.q - 1.0)
        if abs(k) < 1e-15:
            out = s / damping.alpha
        else:
            out = ((s + A) ** (k + 1.0) - A ** (k + 1.0)) / (damping.alpha * (k + 1.0))
    else:
        raise ValueError("no closed form for the exp-flat profile")
    return out if out.ndim else float(out)


def closed_form_integral_check(family: WeightFamily, S: float, power: float,
                               n_pieces: int = 48) -> tuple[float, float, float]:
    """Compare quadrature and closed form for
    integral_S^inf phi'(t) eps(t)^power dt.

    The quadrature runs in the t variable over the tabulated range (with the
    exact power tail beyond it) and therefore exercises the interpolated phi;
    the closed form is 1/[(km-1)(phi(S)+A)^(km-1)].  Returns
    (quadrature, closed_form, relative_difference).
    """
    if S < 0:
        raise ValueError("S must be nonnegative")
    k = float(power)
    m = family.m
    A = family.A
    km1 = k * m - 1.0
    if km1 <= 0:
        raise ValueError("power * m must exceed 1")
    phi_S = float(family.phi(S))
    closed = 1.0 / (km1 * (phi_S + A) ** km1)

    s_hi = family.s_max
    t_hi = family.t_max
    tail = 1.0 / (km1 * (s_hi + A) ** km1)

    def f(t: float) -> float:
        e = float(family.eps(t))
        return _h_scalar(family.damping, e) * e**k

    # piece boundaries follow the accumulator's geometric growth
    idx = np.unique(np.linspace(0, family.s_tab.size - 1, n_pieces).astype(int))
    knots = family.accum_tab[idx]
    knots = np.concatenate([[S], knots[knots > S], [t_hi]])
    knots = np.unique(knots)
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi - lo <= 0:
            continue
        with warnings.catch_warnings():
            # the tolerance is checked end to end against the closed form
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(f, lo, hi, epsabs=1e-300, epsrel=1e-11, limit=200)
        total += val
    total += tail
    rel = abs(total - closed) / abs(closed)
    return total, closed, rel


def growth_bound_check(family: WeightFamily, s_samples: np.ndarray,
                       rel_slack: float = 1e-9) -> dict:
    """Check the lower growth bounds of phi.

    For each sample s >= A the time t(s) = 2 s / h(1/(2s)^m) must satisfy
    phi(t(s)) >= s; for the polynomial preset additionally
    phi(t) >= 0.5 (alpha t)^(1/(m(q-1)+1)).  Samples whose t(s) exceeds the
    tabulated range are skipped.  Returns counts.
    """
    m = family.m
    A = family.A
    spec = family.damping
    checked = 0
    skipped = 0
    violations = 0
    for s in np.asarray(s_samples, dtype=float):
        if s < A:
            skipped += 1
            continue
        t = 2.0 * s / _h_scalar(spec, (2.0 * s) ** (-m))
        if t > family.t_max:
            skipped += 1
            continue
        checked += 1
        ph = float(family.phi(t))
        if ph < s * (1.0 - rel_slack):
            violations += 1
        if spec.kind is DampingKind.POLYNOMIAL and spec.q > 1:
            lower = 0.5 * (spec.alpha * t) ** (1.0 / (m * (spec.q - 1.0) + 1.0))
            if ph < lower * (1.0 - rel_slack):
                violations += 1
    return {"checked": checked, "skipped": skipped, "violations": violations}


def t_m_value(m: int, eta: float, damping: DampingSpec) -> float:
    """Onset time (2 / eta^(1/m)) / h(eta / 2^m) of the strength-m decay
    estimate."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (0 < eta <= 1):
        raise ValueError("eta must lie in (0, 1]")
    return (2.0 / eta ** (1.0 / m)) / _h_scalar(damping, eta / 2.0**m)
