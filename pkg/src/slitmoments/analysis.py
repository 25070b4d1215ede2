"""Post-processing of ensembles: screen histogram, far-field reference,
uncertainty belts, snapshots and arrival-time statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import stats
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks

from .ensemble import ArrivalSet, EnsembleResult
from .integrate import RangeError, Trajectory, interpolate
from .model import PhysParams, SlitMomentsError
from .potential import probe_energy, slit_centers, slit_width

__all__ = [
    "EmptyInputError",
    "ConfigurationError",
    "UndefinedCorrelationError",
    "HistogramSpec",
    "Histogram",
    "FraunhoferSpec",
    "BeltSeries",
    "Snapshot",
    "ArrivalTimes",
    "InterferenceReport",
    "histogram",
    "smooth",
    "fraunhofer_reference",
    "belt",
    "snapshot",
    "arrival_times",
    "fringe_score",
    "score_histogram",
    "find_maxima",
    "interference_report",
    "mirror_symmetry_pvalue",
]


class EmptyInputError(SlitMomentsError, ValueError):
    pass


class ConfigurationError(SlitMomentsError, ValueError):
    pass


class UndefinedCorrelationError(SlitMomentsError, ValueError):
    pass


@dataclass(frozen=True)
class HistogramSpec:
    bin_width: float = 0.1
    range: tuple[float, float] = (-6.0, 6.0)
    # Gaussian kernel width in length units; None leaves counts unsmoothed
    smoothing: Optional[float] = None

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError("bin_width must be > 0")
        if not self.range[0] < self.range[1]:
            raise ValueError(f"degenerate histogram range {self.range}")

    def edges(self) -> np.ndarray:
        lo, hi = self.range
        nbins = int(round((hi - lo) / self.bin_width))
        return lo + self.bin_width * np.arange(nbins + 1)


@dataclass
class Histogram:
    """Raw counts per bin plus bookkeeping for arrivals outside the range.

    ``counts.sum() + underflow + overflow == n_arrivals``.
    """

    edges: np.ndarray
    counts: np.ndarray
    smoothed: Optional[np.ndarray]
    n_arrivals: int
    underflow: int
    overflow: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


def _y_values(arrivals) -> np.ndarray:
    if isinstance(arrivals, EnsembleResult):
        arrivals = arrivals.arrivals()
    if isinstance(arrivals, ArrivalSet):
        return arrivals.y_hit
    return np.asarray(arrivals, dtype=float).ravel()


def smooth(counts: np.ndarray, bandwidth: float, bin_width: float) -> np.ndarray:
    """Gaussian-kernel smoothing; mass outside the window is dropped."""
    return gaussian_filter1d(np.asarray(counts, dtype=float), bandwidth / bin_width, mode="constant")


def histogram(arrivals, spec: HistogramSpec = HistogramSpec()) -> Histogram:
    """Bin arrival positions on the screen.

    ``arrivals`` may be an ArrivalSet, an EnsembleResult or a plain array of
    ``y_hit`` values.
    """
    y = _y_values(arrivals)
    if y.size == 0:
        raise EmptyInputError("no arrivals to histogram")
    edges = spec.edges()
    # integer bin index avoids edge drift from accumulated float sums
    idx = np.floor((y - edges[0]) / spec.bin_width).astype(np.int64)
    nb = len(edges) - 1
    under = int(np.sum(idx < 0))
    over = int(np.sum(idx >= nb))
    counts = np.bincount(idx[(idx >= 0) & (idx < nb)], minlength=nb)
    smoothed = None
    if spec.smoothing:
        smoothed = smooth(counts, spec.smoothing, spec.bin_width)
    return Histogram(edges, counts, smoothed, int(y.size), under, over)


@dataclass(frozen=True)
class FraunhoferSpec:
    lambda_db: float
    d: float
    a: float
    big_l: float
    amplitude: float = 1.0
    envelope: bool = True

    def __post_init__(self):
        for name in ("lambda_db", "d", "a", "big_l", "amplitude"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.a < self.d:
            raise ValueError(f"slit width a={self.a} must be below separation d={self.d}")

    @property
    def fringe_spacing(self) -> float:
        return self.lambda_db * self.big_l / self.d

    @classmethod
    def from_physics(
        cls,
        p: PhysParams,
        px0: float,
        x_screen: float,
        e_probe: Optional[float] = None,
        amplitude: float = 1.0,
        envelope: bool = True,
    ) -> "FraunhoferSpec":
        """Derive every parameter from the beam and barrier; nothing is fitted.

        The barrier sits at x = 0, so the propagation distance is |x_screen|.
        """
        geom = slit_centers(p)
        e = probe_energy(p, px0) if e_probe is None else e_probe
        return cls(
            lambda_db=2.0 * math.pi * p.hbar / abs(px0),
            d=geom.d,
            a=slit_width(p, e),
            big_l=abs(x_screen),
            amplitude=amplitude,
            envelope=envelope,
        )


def fraunhofer_reference(spec: FraunhoferSpec, ys) -> np.ndarray:
    """Two-slit far-field intensity ``A cos^2(pi d y/(lam L)) sinc^2(pi a y/(lam L))``."""
    ys = np.asarray(ys, dtype=float)
    scale = spec.lambda_db * spec.big_l
    out = spec.amplitude * np.cos(math.pi * spec.d * ys / scale) ** 2
    if spec.envelope:
        # numpy's sinc is sin(pi u)/(pi u) and exact at u = 0
        out = out * np.sinc(spec.a * ys / scale) ** 2
    return out


@dataclass(frozen=True)
class BeltSeries:
    t: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray
    y_lo: np.ndarray
    y_hi: np.ndarray


def belt(traj: Trajectory) -> BeltSeries:
    """Position bands ``x +- sx`` and ``y +- sy`` at every sample."""
    if len(traj) == 0:
        raise EmptyInputError("empty trajectory")
    z = traj.z
    return BeltSeries(
        t=traj.t.copy(),
        x_lo=z[:, 0] - z[:, 4],
        x_hi=z[:, 0] + z[:, 4],
        y_lo=z[:, 1] - z[:, 6],
        y_hi=z[:, 1] + z[:, 6],
    )


@dataclass(frozen=True)
class Snapshot:
    t: float
    index: np.ndarray
    xy: np.ndarray


def snapshot(results: EnsembleResult, t: float) -> Snapshot:
    """Interpolated positions of every retained trajectory at time ``t``."""
    if results.trajectories is None:
        raise ConfigurationError("snapshot needs an ensemble run with retained trajectories")
    kept = [(i, tr) for i, tr in enumerate(results.trajectories) if tr is not None]
    if not kept:
        raise EmptyInputError("no retained trajectories")
    start = max(tr.t[0] for _, tr in kept)
    stop = min(tr.t[-1] for _, tr in kept)
    if not start <= t <= stop:
        raise RangeError(f"t={t!r} outside the common span [{start!r}, {stop!r}]")
    xy = np.empty((len(kept), 2))
    for row, (_, tr) in enumerate(kept):
        st = interpolate(tr, t)
        xy[row] = st.x, st.y
    return Snapshot(t=float(t), index=np.array([i for i, _ in kept]), xy=xy)


@dataclass(frozen=True)
class ArrivalTimes:
    index: np.ndarray
    y0: np.ndarray
    t_hit: np.ndarray
    t_min: float
    t_median: float
    t_max: float
    counts: np.ndarray
    edges: np.ndarray


def arrival_times(results: Union[EnsembleResult, ArrivalSet], bins: int = 50) -> ArrivalTimes:
    a = results.arrivals() if isinstance(results, EnsembleResult) else results
    if len(a) == 0:
        raise EmptyInputError("no arrivals")
    lo, hi = float(a.t_hit.min()), float(a.t_hit.max())
    if hi == lo:
        lo, hi = lo - 0.5e-3, hi + 0.5e-3
    counts, edges = np.histogram(a.t_hit, bins=bins, range=(lo, hi))
    return ArrivalTimes(
        index=a.index,
        y0=a.y0,
        t_hit=a.t_hit,
        t_min=float(a.t_hit.min()),
        t_median=float(np.median(a.t_hit)),
        t_max=float(a.t_hit.max()),
        counts=counts,
        edges=edges,
    )


def fringe_score(values, reference) -> float:
    """Pearson correlation of two equally sampled curves."""
    a = np.asarray(values, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("fringe_score needs two equal-length curves of >= 2 points")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant curve")
    return float(np.corrcoef(a, b)[0, 1])


def score_histogram(
    hist: Histogram,
    spec: FraunhoferSpec,
    bandwidth_bins: float = 2.0,
    window_fringes: float = 3.0,
) -> float:
    """Correlate the smoothed histogram with the reference within
    ``|y| <= window_fringes`` fringe spacings."""
    sm = smooth(hist.counts, bandwidth_bins * hist.bin_width, hist.bin_width)
    c = hist.centers
    mask = np.abs(c) <= window_fringes * spec.fringe_spacing
    return fringe_score(sm[mask], fraunhofer_reference(spec, c[mask]))


def find_maxima(curve: np.ndarray, min_prominence: float = 0.1) -> np.ndarray:
    """Indices of local maxima with prominence >= ``min_prominence * max``."""
    curve = np.asarray(curve, dtype=float)
    peak = curve.max()
    if peak <= 0:
        return np.array([], dtype=int)
    idx, _ = find_peaks(np.concatenate([[0.0], curve, [0.0]]), prominence=min_prominence * peak)
    return idx - 1


@dataclass(frozen=True)
class InterferenceReport:
    global_max_y: float
    maxima_y: np.ndarray
    symmetric_pairs: list
    measured_spacing: float
    reference_spacing: float
    score: float


def interference_report(
    hist: Histogram, spec: FraunhoferSpec, bandwidth_bins: float = 2.0
) -> InterferenceReport:
    """Locate fringes in the smoothed histogram and compare with the reference.

    Secondary maxima count as a symmetric pair when ``|y_left + y_right|`` is
    within one bin width.  The measured spacing is the mean gap between the
    global maximum and its nearest maxima on either side (NaN if either side
    has none).
    """
    sm = smooth(hist.counts, bandwidth_bins * hist.bin_width, hist.bin_width)
    c = hist.centers
    peaks = find_maxima(sm)
    gmax = float(c[int(np.argmax(sm))])
    ys = c[peaks]
    left = sorted((y for y in ys if y < gmax), reverse=True)
    right = sorted(y for y in ys if y > gmax)
    spacing = float("nan")
    if left and right:
        spacing = 0.5 * (right[0] - left[0])
    pairs = [
        (float(yl), float(yr))
        for yl in ys[ys < 0]
        for yr in ys[ys > 0]
        if abs(yl + yr) <= hist.bin_width + 1e-12
    ]
    try:
        score = score_histogram(hist, spec, bandwidth_bins)
    except UndefinedCorrelationError:
        score = float("nan")
    return InterferenceReport(gmax, ys, pairs, spacing, spec.fringe_spacing, score)


def mirror_symmetry_pvalue(arrivals, n_bins: int = 40) -> float:
    """Chi-square test that the arrival distribution is even in y.

    Counts in mirrored bins (b, -b) are compared pairwise; the statistic
    sum (n_b - n_-b)^2 / (n_b + n_-b) is chi-square with one degree of
    freedom per occupied pair under the symmetric hypothesis.
    """
    y = _y_values(arrivals)
    if y.size == 0:
        raise EmptyInputError("no arrivals")
    # on-axis hits carry no sign information
    y = y[y != 0.0]
    if y.size == 0:
        return 1.0
    r = float(np.max(np.abs(y))) * (1 + 1e-9) or 1.0
    counts, _ = np.histogram(np.abs(y), bins=n_bins, range=(0.0, r))
    pos, _ = np.histogram(y[y > 0], bins=n_bins, range=(0.0, r))
    neg = counts - pos
    tot = pos + neg
    occupied = tot > 0
    stat = float(np.sum((pos[occupied] - neg[occupied]) ** 2 / tot[occupied]))
    return float(stats.chi2.sf(stat, int(np.sum(occupied))))
