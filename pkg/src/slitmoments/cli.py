"""Command-line entry point.

Subcommands: ``simulate`` (one trajectory), ``ensemble`` (many, with
histogram and fringe analysis), ``validate`` (self-checks) and ``geometry``
(derived slit quantities).  Summaries go to stdout as JSON.  Exit status is 0
on success, 1 on a physics or check failure and 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    EmptyInputError,
    FraunhoferSpec,
    HistogramSpec,
    arrival_times,
    belt,
    fraunhofer_reference,
    histogram,
    interference_report,
    snapshot,
)
from .config import ConfigError, RunConfig, as_table, load_config
from .ensemble import build_ics, run_ensemble
from .integrate import Arrival, RangeError, Reflected, StiffnessError, integrate
from .io import (
    write_arrival_times_csv,
    write_histogram_csv,
    write_outcomes_csv,
    write_snapshot_csv,
    write_trajectory_csv,
)
from .model import STATE_FIELDS, DomainError
from .potential import probe_energy, slit_centers, slit_width
from .svg import Plot
from .validation import run_validation

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _clean(obj):
    """Make a summary JSON-safe: NaN/inf become null, numpy scalars become floats."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _emit(payload) -> None:
    print(json.dumps(_clean(payload), indent=2, sort_keys=True))


def _state_dict(st) -> dict:
    if st is None:
        return None
    return {"t": st.t, **{f: getattr(st, f) for f in STATE_FIELDS}}


def _overrides(args) -> dict:
    out = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected section.key=value")
        out[key.strip()] = value.strip()
    flag_map = {
        "seed": "seed",
        "out": "output.dir",
        "workers": "output.workers",
        "potential": "physics.potential",
        "n": "ensemble.n",
        "sampler": "ensemble.sampler",
        "envelope": "analysis.envelope",
        "snapshot_t": "analysis.snapshot_t",
    }
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = str(value)
    if getattr(args, "svg", False):
        out["output.svg"] = "true"
    if getattr(args, "retain_trajectories", False):
        out["output.retain_trajectories"] = "true"
    return out


def _reference(cfg: RunConfig) -> FraunhoferSpec:
    return FraunhoferSpec.from_physics(
        cfg.physics,
        cfg.ensemble.px0,
        cfg.integrator.x_screen,
        e_probe=cfg.analysis.probe_energy,
        envelope=cfg.analysis.envelope,
    )


def cmd_geometry(cfg: RunConfig, args) -> int:
    p = cfg.physics
    geom = slit_centers(p)
    e = cfg.analysis.probe_energy or probe_energy(p, cfg.ensemble.px0)
    ref = _reference(cfg)
    _emit({
        "command": "geometry",
        "y_slit": geom.y_slit,
        "d": geom.d,
        "probe_energy": e,
        "a_width": slit_width(p, e),
        "lambda_dB": ref.lambda_db,
        "L": ref.big_l,
        "fringe_spacing": ref.fringe_spacing,
    })
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    out = cfg.output.dir
    out.mkdir(parents=True, exist_ok=True)
    st0 = build_ics(cfg.ensemble, cfg.physics, np.array([args.y0]))[0]
    try:
        traj = integrate(st0, cfg.physics, cfg.integrator, kind=cfg.kind)
    except StiffnessError as exc:
        _emit({"command": "simulate", "error": "integration", "message": str(exc),
               "last_state": _state_dict(exc.last_state)})
        return EXIT_FAIL
    files = [write_trajectory_csv(out / "trajectory.csv", traj)]
    if cfg.output.svg:
        b = belt(traj)
        z = traj.z
        plot = Plot(f"trajectory y0={args.y0:g}", "x", "y")
        plot.band(z[:, 0], b.y_lo, b.y_hi).line(z[:, 0], z[:, 1])
        plot.save(out / "trajectory.svg")
        files.append(out / "trajectory.svg")
    o = traj.outcome
    summary = {
        "command": "simulate",
        "y0": args.y0,
        "outcome": o.name,
        "samples": len(traj),
        "energy_drift": traj.energy_drift(),
        "final_state": _state_dict(o.state),
        "files": files,
    }
    if isinstance(o, Arrival):
        summary.update(y_hit=o.y_hit, t_hit=o.t_hit)
    elif isinstance(o, Reflected):
        summary.update(t_exit=o.t_exit)
    _emit(summary)
    return EXIT_OK


def _ensemble_svgs(out: Path, res, hist, ref, times, snap) -> list:
    files = []
    c = hist.centers
    curve = fraunhofer_reference(ref, c)
    peak = hist.smoothed.max() if hist.smoothed is not None else hist.counts.max()
    if peak > 0:
        curve = curve * (peak / curve.max())
    plot = Plot("arrival histogram", "y at screen", "count")
    plot.steps(hist.edges, hist.counts, color="#7f8c8d")
    if hist.smoothed is not None:
        plot.line(c, hist.smoothed)
    plot.line(c, curve, color="#2c3e50", dash="4 3")
    plot.save(out / "histogram.svg")
    files.append(out / "histogram.svg")

    if times is not None:
        tp = Plot("arrival times", "t_hit", "count")
        tp.steps(times.edges, times.counts)
        tp.save(out / "arrival_times.svg")
        files.append(out / "arrival_times.svg")

    if res.trajectories is not None:
        tr = Plot("trajectories", "x", "y")
        keep = [t for t in res.trajectories if t is not None]
        stride = max(1, len(keep) // 200)
        for t in keep[::stride]:
            tr.line(t.z[:, 0], t.z[:, 1], width=0.5)
        tr.save(out / "trajectories.svg")
        files.append(out / "trajectories.svg")
    if snap is not None:
        sp = Plot(f"positions at t={snap.t:g}", "x", "y")
        sp.points(snap.xy[:, 0], snap.xy[:, 1])
        sp.save(out / "snapshot.svg")
        files.append(out / "snapshot.svg")
    return files


def cmd_ensemble(cfg: RunConfig, args) -> int:
    out = cfg.output.dir
    out.mkdir(parents=True, exist_ok=True)
    an = cfg.analysis
    res = run_ensemble(
        cfg.ensemble, cfg.physics, cfg.integrator, cfg.kind,
        workers=cfg.output.workers, retain=cfg.output.retain_trajectories,
    )
    files = [write_outcomes_csv(out / "outcomes.csv", res)]
    ref = _reference(cfg)
    hist = histogram(res, HistogramSpec(an.bin_width, an.y_range, an.smoothing_bins * an.bin_width))
    files.append(write_histogram_csv(out / "histogram.csv", hist, ref, an.smoothing_bins))
    report = interference_report(hist, ref, an.smoothing_bins)

    try:
        times = arrival_times(res, an.time_bins)
        files.append(write_arrival_times_csv(out / "arrival_times.csv", times))
    except EmptyInputError:
        times = None

    snap = None
    if res.trajectories is not None:
        try:
            snap = snapshot(res, an.snapshot_t)
            files.append(write_snapshot_csv(out / "snapshot.csv", snap))
        except RangeError:
            pass
    if cfg.output.svg:
        files.extend(_ensemble_svgs(out, res, hist, ref, times, snap))

    _emit({
        "command": "ensemble",
        "n": len(res.outcomes),
        "counts": res.counts,
        "crossing_count": res.crossing_count(),
        "crossing_fraction_y0_gt_0.3": res.crossing_fraction(0.3),
        "histogram": {"in_range": int(hist.counts.sum()), "underflow": hist.underflow,
                      "overflow": hist.overflow},
        "fringe_score": report.score,
        "global_max_y": report.global_max_y,
        "measured_spacing": report.measured_spacing,
        "reference_spacing": report.reference_spacing,
        "arrival_time": None if times is None else
        {"min": times.t_min, "median": times.t_median, "max": times.t_max},
        "config": as_table(cfg),
        "files": files,
    })
    return EXIT_OK


def cmd_validate(cfg: RunConfig, args) -> int:
    checks = run_validation(cfg.physics, cfg.integrator)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file merged over the defaults")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (repeatable)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--potential", choices=("double_slit", "free", "harmonic"))

    parser = argparse.ArgumentParser(prog="slitmoments", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="integrate one trajectory")
    sim.add_argument("--y0", type=float, default=0.0)
    sim.add_argument("--svg", action="store_true")

    ens = sub.add_parser("ensemble", parents=[common], help="run an ensemble and analyse arrivals")
    ens.add_argument("--n", type=int)
    ens.add_argument("--sampler", choices=("grid", "uniform", "gaussian"))
    ens.add_argument("--svg", action="store_true")
    ens.add_argument("--retain-trajectories", action="store_true")
    ens.add_argument("--envelope", choices=("on", "off"))
    ens.add_argument("--snapshot-t", type=float)

    sub.add_parser("validate", parents=[common], help="run the self-check suite")
    sub.add_parser("geometry", parents=[common], help="print derived slit geometry")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "validate": cmd_validate,
    "geometry": cmd_geometry,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        _emit({"error": "config", "field": exc.field, "message": str(exc)})
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except DomainError as exc:
        _emit({"command": args.command, "error": "domain", "message": str(exc)})
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
