"""Named property suites behind ``wavelab verify``.

Each suite returns rows (name, passed, detail); the CLI renders them and
sets the exit code.  Sizes here are desk scale: the full pinned versions
of these checks live in the acceptance test module.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from . import convexity as cx
from . import gronwall as gw
from . import multipliers as mult
from . import weights as wt
from .damping import CoefficientProfile, DampingSpec, default_cutoffs
from .energy import trapezoid_weights
from .sim import Grid, InitialData, run

__all__ = ["SUITES", "run_suite"]


def _row(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def convex_suite() -> list[dict]:
    rows = []
    for p in (1.2, 1.5, 1.8):
        viol = cx.check_product_inequality(p, n_samples=100_000, seed=0)
        rows.append(_row(f"product_inequality_p{p}", viol == 0, f"violations={viol}"))

    for p in (1.2, 1.5, 1.8):
        rng = np.random.default_rng(1)
        bs = cx.shifted_gradient(rng.uniform(0.0, 80.0, 1000), p)
        closed = cx.shifted_conjugate(bs, p)
        sup = cx.shifted_conjugate_sup_batch(bs, p)
        worst = float(np.max(np.abs(sup - closed)))
        rows.append(_row(f"conjugate_closed_form_p{p}", worst <= 1e-8,
                         f"max|closed-sup|={worst:.2e}"))

    for p in (1.2, 1.5, 1.8):
        env = {
            "potential": ((p - 1.0) / 2.0, 1.0 / p, 2.0),
            "conjugate": (1.0 / (2.0 * (p - 1.0)), (p - 1.0) / p, 5.0),
            "gradient_mix": ((p - 1.0) ** 2, 1.0, 3.0),
        }
        ok = True
        details = []
        for kind, (a0, a1, factor) in env.items():
            lo, hi = cx.sandwich_ratios(kind, p)
            good = lo > 0 and lo >= min(a0, a1) / factor and hi <= factor * max(a0, a1)
            ok = ok and good
            details.append(f"{kind}:[{lo:.3g},{hi:.3g}]")
        rows.append(_row(f"sandwich_ratios_p{p}", ok, " ".join(details)))

    reports = []
    for p in (1.2, 1.5, 1.8):
        for M in (1.0, 2.0, 4.0):
            c1 = cx.two_point_inequality_constant(p, M, n_grid=1000)
            c2 = cx.two_point_inequality_constant(p, M, n_grid=3000)
            rel = abs(c1 - c2) / max(c1, c2)
            rows.append(_row(f"two_point_stability_p{p}_M{int(M)}", rel <= 0.05,
                             f"sup={c2:.4g} drift={rel:.2%}"))
            reports.append(cx.constants_report("two_point", p, c2, 3000, M=M))
    out = os.environ.get("WAVELAB_OUT", "").strip()
    if out:
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        cx.write_constants_report(outdir / "convex_constants.json", reports)
    return rows


def gronwall_suite() -> list[dict]:
    rows = []
    for p in (2.5, 3.0, 4.0, 8.0):
        for m in (1, 2, 3):
            res = gw.bootstrap_exponents(p, 200, m=m)
            err = abs(res["stages"][-1] - res["limit"])
            rows.append(_row(f"bootstrap_limit_p{p}_m{m}", err <= 1e-12,
                             f"|e_200 - mp|={err:.1e}"))

    t = np.linspace(0.0, 60.0, 6001)
    fn = gw.SampledDecayFn(t, (1.0 + t) ** -2.0, tail=("power", 2.0))
    res = gw.check_decay_inequality(fn, sigma=1.0, sigma_prime=1.0, c=1.0 / 3.0 + 1e-6)
    rows.append(_row("power_law_hypothesis", res.hypothesis_holds,
                     f"fitted C={res.fitted_constant:.4g}"))

    fn4 = gw.SampledDecayFn(t, (1.0 + t) ** -3.0, tail=("power", 3.0))
    res4 = gw.check_three_term_inequality(fn4, p=3.0, c=0.5)
    rows.append(_row("three_term_positive", res4.hypothesis_holds and res4.conclusion_bounded,
                     f"bound={res4.fitted_constant:.4g}"))

    neg = gw.SampledDecayFn(t, (1.0 + t) ** -2.0, tail=("power", 2.0))
    resn = gw.check_three_term_inequality(neg, p=4.0, c=10.0)
    rows.append(_row("three_term_negative_control",
                     (not resn.hypothesis_holds) and (not resn.conclusion_bounded),
                     f"first violation t={resn.first_violation_t}"))
    return rows


def weights_suite() -> list[dict]:
    rows = []
    specs = {"poly_q3": DampingSpec.polynomial(3.0), "linear": DampingSpec.linear(1.0)}
    for label, spec in specs.items():
        for m in (1, 2, 3):
            fam = wt.build_weight_family(m, 1.0, spec)
            worst = 0.0
            for power in (2.0, 3.0):
                _, _, rel = wt.closed_form_integral_check(fam, S=0.0, power=power)
                worst = max(worst, rel)
            rows.append(_row(f"closed_form_integrals_{label}_m{m}", worst <= 1e-6,
                             f"max rel diff={worst:.2e}"))
            s_probe = np.geomspace(0.01, fam.s_max / 4.0, 40)
            s_probe = s_probe[s_probe <= fam.s_max]
            rt = np.max(np.abs(fam.phi(fam.psi(s_probe)) - s_probe) / s_probe)
            rows.append(_row(f"round_trip_{label}_m{m}", rt <= 1e-8, f"max rel={rt:.1e}"))
            gb = wt.growth_bound_check(fam, np.geomspace(fam.A, fam.s_max / 8.0, 60))
            rows.append(_row(f"growth_bounds_{label}_m{m}",
                             gb["violations"] == 0 and gb["checked"] > 0,
                             f'checked={gb["checked"]} violations={gb["violations"]}'))
    return rows


def multipliers_suite() -> list[dict]:
    rows = []
    # the Green formula and the banded solve are the same linear map
    # (rounding-level agreement); order 2 is confirmed against the
    # closed-form continuum solution
    diffs = []
    worst_pair = 0.0
    for n in (64, 128, 256):
        x = np.arange(n + 1) / n
        src = np.sin(3 * np.pi * x)
        v = mult.solve_elliptic(src, 1.0 / n).v
        diffs.append(float(np.max(np.abs(v + src / (9 * np.pi**2)))))
        worst_pair = max(worst_pair, float(np.max(np.abs(
            v - mult.tridiagonal_oracle(src, 1.0 / n)))))
    ratios = [diffs[i] / diffs[i + 1] for i in range(len(diffs) - 1)]
    ok = all(3.3 <= r <= 4.7 for r in ratios) and worst_pair <= 1e-14
    rows.append(_row("elliptic_order2_and_banded_twin", ok,
                     "ratios=" + ",".join(f"{r:.2f}" for r in ratios)
                     + f" pair diff={worst_pair:.1e}"))

    # identity residuals shrink with the grid on a short linear run
    damping = DampingSpec.linear(1.0)
    profile = CoefficientProfile()
    cuts = default_cutoffs()
    fams = wt.build_weight_family(1, 1.0, damping)
    residuals = {name: [] for name in mult.IDENTITIES}
    for n in (64, 128, 256):
        traj = run(InitialData.sine(), damping, Grid(n), t_final=2.0,
                   profile=profile, p=3.0, snapshot_stride=2)
        for name in mult.IDENTITIES:
            rep = mult.identity_residual(traj, name, fams, damping, profile,
                                         cuts, S=0.0, T=2.0)
            residuals[name].append(rep.normalized)
    for name, series in residuals.items():
        dec = all(series[i] > series[i + 1] for i in range(len(series) - 1))
        rows.append(_row(f"identity_{name}_refinement", dec,
                         "normalized=" + ",".join(f"{v:.2e}" for v in series)))
    return rows


SUITES = {
    "convex": convex_suite,
    "gronwall": gronwall_suite,
    "weights": weights_suite,
    "multipliers": multipliers_suite,
}


def run_suite(name: str) -> list[dict]:
    if name == "all":
        rows = []
        for key in ("convex", "gronwall", "weights", "multipliers"):
            rows.extend(SUITES[key]())
        return rows
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
