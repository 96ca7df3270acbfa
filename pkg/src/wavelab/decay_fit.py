"""Decay-model fitting for simulated energy traces.

Three models, each linear after a change of variables:

* exponential : ln E against t          -> rate
* algebraic   : ln E against ln t       -> exponent
* log-power   : ln E against ln ln t    -> exponent

A fit is flagged as a model mismatch when the parameter drifts between the
two halves of the window, which is exactly what happens when the wrong
family is fitted (an exponential trace fitted algebraically shows an
exponent growing with the window, and vice versa).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .damping import DampingSpec, OriginBehavior, classify_origin

__all__ = [
    "DecayFitReport",
    "TheoreticalTarget",
    "fit_exponential",
    "fit_algebraic",
    "fit_logpower",
    "theoretical_target",
    "default_window",
    "fit_trace",
]

# parameter drift between window halves that marks a model mismatch, and
# the R^2 floor below which a fit cannot claim its family
_DRIFT_REL = 0.2
_DRIFT_ABS = 1e-6
_R2_FLOOR = 0.9


@dataclass(frozen=True)
class TheoreticalTarget:
    """Predicted decay family and exponent band for one configuration."""

    model: str                   # "exponential" | "algebraic" | "logpower"
    lo: Optional[float] = None   # exponent band (None for exponential rate)
    hi: Optional[float] = None
    source: str = ""


@dataclass
class DecayFitReport:
    model: str
    rate: float                  # decay rate (exponential) or exponent
    window: tuple[float, float]
    r_squared: float
    mismatch: bool
    window_drift: float
    target: Optional[TheoreticalTarget] = None
    verdict: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "rate": self.rate,
            "window": list(self.window),
            "r_squared": self.r_squared,
            "mismatch": self.mismatch,
            "window_drift": self.window_drift,
        }
        if self.target is not None:
            out["target"] = {
                "model": self.target.model,
                "lo": self.target.lo,
                "hi": self.target.hi,
                "source": self.target.source,
            }
        if self.verdict is not None:
            out["verdict"] = self.verdict
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least squares y ~ slope x + icept; returns (slope, icept, R^2).
    A perfectly flat series counts as a perfect fit."""
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    flat = 1e-24 * y.size * (1.0 + float(np.mean(y**2)))  # rounding-level variance
    if ss_tot <= flat:
        r2 = 1.0 if ss_res <= flat else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(icept), r2


def _windowed(times, values, window):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.sum(mask) < 4:
        raise ValueError("window contains fewer than 4 samples")
    if np.any(v[mask] <= 0):
        raise ValueError("nonpositive energy inside the fit window")
    return t[mask], v[mask]


def _fit_with_drift(x: np.ndarray, lnE: np.ndarray):
    slope, _, r2 = _linfit(x, lnE)
    half = x.size // 2
    s1, _, _ = _linfit(x[:half], lnE[:half])
    s2, _, _ = _linfit(x[half:], lnE[half:])
    drift = abs(s2 - s1)
    mismatch = drift > max(_DRIFT_REL * abs(slope), _DRIFT_ABS) or r2 < _R2_FLOOR
    return slope, r2, drift, mismatch


def fit_exponential(times, energies, window) -> DecayFitReport:
    """ln E regressed on t; rate = -slope."""
    t, E = _windowed(times, energies, window)
    slope, r2, drift, mism = _fit_with_drift(t, np.log(E))
    return DecayFitReport("exponential", -slope, tuple(window), r2, mism, drift)


def fit_algebraic(times, energies, window) -> DecayFitReport:
    """ln E regressed on ln t; exponent = -slope.  Needs t > 0."""
    t, E = _windowed(times, energies, window)
    if t[0] <= 0:
        raise ValueError("algebraic fit needs strictly positive times")
    slope, r2, drift, mism = _fit_with_drift(np.log(t), np.log(E))
    return DecayFitReport("algebraic", -slope, tuple(window), r2, mism, drift)


def fit_logpower(times, energies, window) -> DecayFitReport:
    """ln E regressed on ln ln t; exponent = -slope.  Needs t_lo >= 2."""
    if window[0] < 2.0:
        raise ValueError("log-power fit needs window start >= 2")
    t, E = _windowed(times, energies, window)
    slope, r2, drift, mism = _fit_with_drift(np.log(np.log(t)), np.log(E))
    return DecayFitReport("logpower", -slope, tuple(window), r2, mism, drift)


_FITTERS = {"exponential": fit_exponential, "algebraic": fit_algebraic,
            "logpower": fit_logpower}


def theoretical_target(p: float, damping: DampingSpec, regime: str = "auto") -> TheoreticalTarget:
    """Predicted decay family for (p, damping).

    * positive slope at the origin -> exponential decay;
    * polynomial flatness of power q -> algebraic, exponent in [p/q, p/(q-1)];
    * exponential flatness of power q -> log-power, exponent p/q.

    ``regime`` selects the p range being invoked: "p_gt_2", "p_lt_2", or
    "auto".  p in {1, inf} is out of scope.
    """
    if not (1.0 < p < math.inf):
        raise ValueError("p must lie strictly between 1 and infinity")
    if regime not in ("auto", "p_gt_2", "p_lt_2"):
        raise ValueError("regime must be 'auto', 'p_gt_2' or 'p_lt_2'")
    if regime == "p_gt_2" and not p > 2:
        raise ValueError("the p > 2 estimate needs p > 2")
    if regime == "p_lt_2" and not (1 < p < 2):
        raise ValueError("the 1 < p < 2 estimate needs p in (1, 2)")
    source = regime if regime != "auto" else ("p_gt_2" if p >= 2 else "p_lt_2")
    if classify_origin(damping) is OriginBehavior.POSITIVE_DERIVATIVE:
        return TheoreticalTarget("exponential", None, None, source)
    from .damping import DampingKind

    if damping.kind is DampingKind.POLYNOMIAL:
        return TheoreticalTarget("algebraic", p / damping.q, p / (damping.q - 1.0), source)
    return TheoreticalTarget("logpower", p / damping.q, p / damping.q, source)


def default_window(times, energies, floor_factor: float = 1e3) -> tuple[float, float]:
    """Last temporal decade [T/10, T] of the trajectory, with snapshots whose
    energy sits at the floating-point floor (relative to the initial energy)
    excluded from the top end."""
    t = np.asarray(times, dtype=float)
    E = np.asarray(energies, dtype=float)
    floor = floor_factor * np.finfo(float).eps * E[0]
    ok = E > floor
    if not np.any(ok):
        raise ValueError("the whole trace sits at the floating-point floor")
    t_hi = float(t[ok][-1])
    lo = float(t[-1]) / 10.0
    if t_hi <= lo:
        lo = t_hi / 10.0
    return (lo, t_hi)


def fit_trace(times, energies, models, window=None, p: Optional[float] = None,
              damping: Optional[DampingSpec] = None) -> list[DecayFitReport]:
    """Run the requested fitters over one trace, attaching the theoretical
    target (and a band verdict for algebraic fits) when p and damping are
    given."""
    if window is None:
        window = default_window(times, energies)
    target = None
    if p is not None and damping is not None:
        target = theoretical_target(p, damping)
    reports = []
    for name in models:
        if name not in _FITTERS:
            raise ValueError(f"unknown model {name!r}")
        rep = _FITTERS[name](times, energies, window)
        rep.target = target
        if target is not None:
            if rep.model == target.model:
                if target.model == "exponential":
                    rep.verdict = "consistent" if (rep.rate > 0 and not rep.mismatch) else "inconsistent"
                else:
                    slack = 0.3
                    inside = (target.lo - slack) <= rep.rate <= (target.hi + slack)
                    rep.verdict = "consistent" if inside else "inconsistent"
            else:
                rep.verdict = "other_model"
        reports.append(rep)
    return reports
