"""wavelab: a desk-scale numerical laboratory for the 1D wave equation with
localized nonlinear damping, evolved in characteristic variables, together
with the convex-analysis, weighted-multiplier, and integral-inequality
machinery that controls its L^p energy decay."""

from ._kernels import get_backend, set_backend
from .damping import (CoefficientProfile, CutoffSet, DampingKind, DampingSpec,
                      OriginBehavior, classify_origin, default_cutoffs, eval_cutoffs,
                      eval_g, eval_h)
from .energy import (energy_cal_ep, energy_ep, energy_etilde, dissipation_rate,
                     region_measures, signed_power)
from .sim import Grid, InitialData, NumericalBlowupError, SimState, Trajectory, run, step

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "get_backend",
    "set_backend",
    "CoefficientProfile",
    "CutoffSet",
    "DampingKind",
    "DampingSpec",
    "OriginBehavior",
    "classify_origin",
    "default_cutoffs",
    "eval_cutoffs",
    "eval_g",
    "eval_h",
    "energy_cal_ep",
    "energy_ep",
    "energy_etilde",
    "dissipation_rate",
    "region_measures",
    "signed_power",
    "Grid",
    "InitialData",
    "NumericalBlowupError",
    "SimState",
    "Trajectory",
    "run",
    "step",
]
