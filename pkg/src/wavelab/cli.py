"""Command-line entry points.

    wavelab run <config.toml>            simulate + analyze one scenario
    wavelab verify <suite>               run a property suite (convex,
                                         gronwall, weights, multipliers, all)
    wavelab sweep <config.toml>          grid of scenarios -> aggregate CSV

Exit codes: 0 success, 2 configuration error, 3 numerical blowup.
The environment variable WAVELAB_OUT overrides the output directory.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from pathlib import Path

import numpy as np

from . import decay_fit as dfit
from . import multipliers as mult
from . import weights as wt
from .config import ConfigError, RunConfig, load_config, serialize_config
from .damping import DampingSpec
from .energy import build_trace, trapezoid_weights
from .sim import Grid, InitialData, NumericalBlowupError, run, write_snapshot_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


def _outdir(cfg: RunConfig) -> Path:
    override = os.environ.get("WAVELAB_OUT", "").strip()
    path = Path(override) if override else Path(cfg["output"]["directory"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _snap_window(window, times) -> tuple[float, float]:
    """Clamp a requested [lo, hi] onto the snapshot grid."""
    dt_snap = times[1] - times[0]
    lo = times[0] + round((window[0] - times[0]) / dt_snap) * dt_snap
    hi = times[0] + round((window[1] - times[0]) / dt_snap) * dt_snap
    lo = max(float(times[0]), lo)
    hi = min(float(times[-1]), hi)
    return float(lo), float(hi)


def run_scenario(cfg: RunConfig, echo=print) -> int:
    outdir = _outdir(cfg)
    sc = cfg["scenario"]
    damping = cfg.damping_spec()
    profile = cfg.profile()
    cuts = cfg.cutoffs()
    grid = Grid(sc["n_cells"])
    init = InitialData.preset(cfg["initial"]["preset"], cfg["initial"]["amplitude"])
    family = wt.build_weight_family(cfg["weights"]["m"],
                                    min(cfg["weights"]["eta"], damping.eta), damping)
    try:
        traj = run(init, damping, grid, sc["t_final"], profile=profile, p=sc["p"],
                   snapshot_stride=sc["snapshot_stride"], mode=sc["mode"],
                   record_energy=True, record_dissipation=sc["record_dissipation"])
    except NumericalBlowupError as exc:
        echo(f"numerical blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

    def eps_of_t(t: float) -> float:
        return family.eps(min(t, family.t_max))

    trace = build_trace(traj, damping, profile, eps_of_t=eps_of_t, eta=family.eta)
    trace.write_csv(outdir / "trace.csv")
    write_snapshot_csv(traj, outdir / "snapshots.csv")
    trace.write_summary_json(outdir / "summary.json", estep=traj.estep)

    lines = [f"scenario {cfg.name}: n_cells={grid.n_cells} p={sc['p']} "
             f"mode={sc['mode']} T={sc['t_final']}"]
    summ = trace.summary(estep=traj.estep)
    lines.append(f"E_p(0)={summ['E_p_initial']:.6g}  E_p(T)={summ['E_p_final']:.6g}  "
                 f"max step increase={summ['max_step_increase']:.3g}")

    fit_window = cfg["fit"]["window"]
    try:
        window = tuple(fit_window) if fit_window else dfit.default_window(trace.t, trace.ep)
        reports = dfit.fit_trace(trace.t, trace.ep, cfg["fit"]["models"],
                                 window=window, p=sc["p"], damping=damping)
    except ValueError as exc:
        reports = []
        lines.append(f"fits skipped: {exc}")
    for rep in reports:
        rep.write_json(outdir / f"fit_{rep.model}.json")
        lines.append(f"fit {rep.model}: rate={rep.rate:.6g} R2={rep.r_squared:.6g} "
                     f"mismatch={rep.mismatch} verdict={rep.verdict}")

    if cfg["multipliers"]["enabled"] and sc["mode"] == "distributed" and traj.n_snapshots >= 3:
        req = cfg["multipliers"]["window"] or [0.0, min(4.0, float(traj.times[-1]))]
        S, T = _snap_window(req, traj.times)
        for name in mult.IDENTITIES:
            rep = mult.identity_residual(traj, name, family, damping, profile,
                                         cuts, S=S, T=T)
            rep.write_json(outdir / f"multiplier_{name}.json")
            lines.append(f"identity {name}: residual={rep.residual:.3e} "
                         f"(normalized {rep.normalized:.3e}) on [{S:g},{T:g}]")

    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")
    (outdir / "config_normalized.toml").write_text(serialize_config(cfg))
    for line in lines:
        echo(line)
    return EXIT_OK


def run_sweep(cfg: RunConfig, allow_large: bool, echo=print) -> int:
    if "sweep" not in cfg.raw:
        echo("config has no [sweep] section", file=sys.stderr)
        return EXIT_CONFIG
    sw = cfg["sweep"]
    sc = cfg["scenario"]
    ps = [float(v) for v in (sw["p"] or [sc["p"]])]
    qs = [float(v) for v in (sw["q"] or [cfg["damping"]["q"]])]
    cells = sorted(set(itertools.product(ps, qs)))
    if len(cells) > 64 and not allow_large:
        echo(f"sweep has {len(cells)} cells (> 64); pass --allow-large",
             file=sys.stderr)
        return EXIT_CONFIG
    n_cells = sw["n_cells"] or sc["n_cells"]
    t_final = sw["t_final"] or sc["t_final"]
    outdir = _outdir(cfg)
    grid = Grid(int(n_cells))
    profile = cfg.profile()
    init = InitialData.preset(cfg["initial"]["preset"], cfg["initial"]["amplitude"])
    rows = []
    for p, q in cells:
        if cfg["damping"]["kind"] == "linear":
            damping = cfg.damping_spec()
        else:
            damping = DampingSpec.polynomial(q, cfg["damping"]["alpha"]) \
                if cfg["damping"]["kind"] == "polynomial" \
                else DampingSpec.expflat(q, cfg["damping"]["alpha"])
        try:
            traj = run(init, damping, grid, t_final, profile=profile, p=p,
                       snapshot_stride=sc["snapshot_stride"], mode=sc["mode"])
        except NumericalBlowupError as exc:
            echo(f"numerical blowup in cell p={p} q={q}: {exc}", file=sys.stderr)
            return EXIT_BLOWUP
        target = dfit.theoretical_target(p, damping)
        window = dfit.default_window(traj.times, traj_energy(traj))
        fitter = {"exponential": dfit.fit_exponential,
                  "algebraic": dfit.fit_algebraic,
                  "logpower": dfit.fit_logpower}[target.model]
        rep = fitter(traj.times, traj_energy(traj), window)
        rep.target = target
        if target.model == "exponential":
            verdict = "consistent" if rep.rate > 0 and not rep.mismatch else "inconsistent"
            lo = hi = ""
        else:
            lo = f"{target.lo:.17g}"
            hi = f"{target.hi:.17g}"
            verdict = "consistent" if (target.lo - 0.3) <= rep.rate <= (target.hi + 0.3) \
                else "inconsistent"
        rows.append(f"{p:.17g},{q:.17g},{rep.model},{rep.rate:.17g},{lo},{hi},"
                    f"{rep.r_squared:.17g},{verdict}")
    csv = "p,q,model,fitted,target_lo,target_hi,R2,verdict\n" + "\n".join(rows) + "\n"
    (outdir / "sweep.csv").write_text(csv)
    echo(f"wrote {len(rows)} rows to {outdir / 'sweep.csv'}")
    return EXIT_OK


def traj_energy(traj) -> np.ndarray:
    """Snapshot energies straight from the stored fields."""
    w = trapezoid_weights(traj.grid.n_nodes, traj.grid.dx)
    p = traj.p
    return (np.abs(traj.rho) ** p + np.abs(traj.xi) ** p) @ w / p


def run_verify(suite: str, echo=print) -> int:
    from .verify import run_suite

    try:
        rows = run_suite(suite)
    except KeyError:
        echo(f"unknown suite {suite!r}; choose from convex, gronwall, weights, "
             f"multipliers, all", file=sys.stderr)
        return EXIT_CONFIG
    width = max(len(r["name"]) for r in rows) + 2
    failed = 0
    for r in rows:
        status = "PASS" if r["passed"] else "FAIL"
        failed += 0 if r["passed"] else 1
        echo(f"{r['name']:<{width}}{status}  {r['detail']}")
    echo(f"{len(rows)} checks, {failed} failed")
    return EXIT_OK if failed == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wavelab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="simulate and analyze one scenario")
    p_run.add_argument("config", type=Path)
    p_ver = sub.add_parser("verify", help="run a property suite")
    p_ver.add_argument("suite", choices=["convex", "gronwall", "weights",
                                         "multipliers", "all"])
    p_sw = sub.add_parser("sweep", help="run a parameter grid")
    p_sw.add_argument("config", type=Path)
    p_sw.add_argument("--allow-large", action="store_true")
    args = parser.parse_args(argv)

    if args.command == "verify":
        return run_verify(args.suite)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "run":
        return run_scenario(cfg)
    return run_sweep(cfg, args.allow_large)


if __name__ == "__main__":
    raise SystemExit(main())
