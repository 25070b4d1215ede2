"""CSV emission and parsing for trajectories, outcomes and analysis tables.

Every table has a fixed header.  Floats are written with ``repr`` (shortest
round-tripping form) so a re-read reproduces the values bit for bit and
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .analysis import ArrivalTimes, FraunhoferSpec, Histogram, Snapshot, fraunhofer_reference, smooth
from .ensemble import EnsembleResult
from .integrate import Arrival, Reflected, Trajectory

__all__ = [
    "TRAJECTORY_COLUMNS",
    "OUTCOME_COLUMNS",
    "HISTOGRAM_COLUMNS",
    "ARRIVAL_TIME_COLUMNS",
    "SNAPSHOT_COLUMNS",
    "write_trajectory_csv",
    "write_outcomes_csv",
    "write_histogram_csv",
    "write_arrival_times_csv",
    "write_snapshot_csv",
    "read_csv",
    "column",
]

TRAJECTORY_COLUMNS = ("t", "x", "y", "px", "py", "sx", "psx", "sy", "psy", "H_Q")
OUTCOME_COLUMNS = ("index", "y0", "outcome", "y_hit", "t_hit")
HISTOGRAM_COLUMNS = ("bin_center", "count", "smoothed", "reference_intensity")
ARRIVAL_TIME_COLUMNS = ("index", "y0", "t_hit")
SNAPSHOT_COLUMNS = ("index", "x", "y")


def _f(v) -> str:
    return repr(float(v))


def _write(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    hq = traj.hamiltonian()
    rows = (
        [_f(t), *(_f(v) for v in z), _f(h)] for t, z, h in zip(traj.t, traj.z, hq)
    )
    return _write(path, TRAJECTORY_COLUMNS, rows)


def write_outcomes_csv(path, res: EnsembleResult) -> Path:
    """One row per particle; ``y_hit``/``t_hit`` are empty unless it arrived.

    Reflected particles report their exit time in ``t_hit``.
    """
    rows = []
    for i, (y0, o) in enumerate(zip(res.y0, res.outcomes)):
        if isinstance(o, Arrival):
            rows.append([i, _f(y0), o.name, _f(o.y_hit), _f(o.t_hit)])
        elif isinstance(o, Reflected):
            rows.append([i, _f(y0), o.name, "", _f(o.t_exit)])
        else:
            rows.append([i, _f(y0), o.name, "", ""])
    return _write(path, OUTCOME_COLUMNS, rows)


def write_histogram_csv(
    path, hist: Histogram, ref: FraunhoferSpec, bandwidth_bins: float = 2.0
) -> Path:
    """Counts, smoothed counts and the reference scaled to the smoothed peak."""
    sm = smooth(hist.counts, bandwidth_bins * hist.bin_width, hist.bin_width)
    c = hist.centers
    curve = fraunhofer_reference(ref, c)
    peak = sm.max()
    if peak > 0 and curve.max() > 0:
        curve = curve * (peak / curve.max())
    rows = ([_f(y), int(n), _f(s), _f(r)] for y, n, s, r in zip(c, hist.counts, sm, curve))
    return _write(path, HISTOGRAM_COLUMNS, rows)


def write_arrival_times_csv(path, at: ArrivalTimes) -> Path:
    rows = ([int(i), _f(y), _f(t)] for i, y, t in zip(at.index, at.y0, at.t_hit))
    return _write(path, ARRIVAL_TIME_COLUMNS, rows)


def write_snapshot_csv(path, snap: Snapshot) -> Path:
    rows = ([int(i), _f(x), _f(y)] for i, (x, y) in zip(snap.index, snap.xy))
    return _write(path, SNAPSHOT_COLUMNS, rows)


def read_csv(path) -> dict[str, list[str]]:
    """Parse any of the tables above into ``{column: [raw strings]}``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        cols = {h: [] for h in header}
        for row in r:
            if len(row) != len(header):
                raise ValueError(f"row width {len(row)} != header width {len(header)}")
            for h, v in zip(header, row):
                cols[h].append(v)
    return cols


def column(table: dict[str, list[str]], name: str) -> np.ndarray:
    """Numeric view of one column; empty cells become NaN."""
    return np.array([float(v) if v != "" else np.nan for v in table[name]])
