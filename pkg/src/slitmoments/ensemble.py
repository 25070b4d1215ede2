"""Heisenberg-saturated initial conditions and parallel trajectory ensembles."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .integrate import (
    Arrival,
    IntegratorConfig,
    Outcome,
    StiffnessError,
    Trajectory,
    integrate,
)
from .model import DomainError, MomentSet, PhaseState, PhysParams, validate_params
from .potential import PotentialKind

__all__ = [
    "SAMPLERS",
    "EnsembleConfig",
    "Failure",
    "EnsembleResult",
    "ArrivalSet",
    "gaussian_initial_moments",
    "sample_y0",
    "build_ics",
    "run_ensemble",
]

SAMPLERS = ("grid", "uniform", "gaussian")


@dataclass(frozen=True)
class EnsembleConfig:
    """Beam and sampling set-up.

    ``sigma`` is the width of the ``gaussian`` sampler (|psi0(y)|^2 of the
    initial packet) and defaults to ``sy0``.  ``u`` overrides the Casimir of
    the physical parameters when given.
    """

    n: int = 2000
    y_range: tuple[float, float] = (-4.0, 4.0)
    sampler: str = "grid"
    seed: int = 0
    sigma: Optional[float] = None
    x0: float = 400.0
    px0: float = -5000.0
    py0: float = 0.0
    sx0: float = 0.2
    sy0: float = 0.2
    u: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        lo, hi = self.y_range
        if not lo < hi:
            raise DomainError(f"degenerate y_range {self.y_range}")
        if self.sampler not in SAMPLERS:
            raise DomainError(f"unknown sampler {self.sampler!r}; expected one of {SAMPLERS}")
        if not (self.sx0 > 0 and self.sy0 > 0):
            raise DomainError("initial dispersions must be > 0")
        if self.sigma is not None and not self.sigma > 0:
            raise DomainError(f"gaussian sampler needs sigma > 0, got {self.sigma!r}")


@dataclass(frozen=True)
class Failure:
    """A particle whose integration broke down."""

    message: str
    state: Optional[PhaseState]
    name = "failed"


@dataclass(frozen=True)
class ArrivalSet:
    index: np.ndarray
    y0: np.ndarray
    y_hit: np.ndarray
    t_hit: np.ndarray

    def __len__(self):
        return len(self.index)


@dataclass
class EnsembleResult:
    y0: np.ndarray
    outcomes: list[Union[Outcome, Failure]]
    trajectories: Optional[list[Optional[Trajectory]]] = None
    counts: dict = field(default_factory=dict)

    def arrivals(self) -> ArrivalSet:
        idx = [i for i, o in enumerate(self.outcomes) if isinstance(o, Arrival)]
        return ArrivalSet(
            index=np.array(idx, dtype=int),
            y0=self.y0[idx],
            y_hit=np.array([self.outcomes[i].y_hit for i in idx], dtype=float),
            t_hit=np.array([self.outcomes[i].t_hit for i in idx], dtype=float),
        )

    def crossing_count(self, y0_min: float = 0.0) -> int:
        """Arrivals landing on the opposite side of the axis from where they started."""
        a = self.arrivals()
        up = (a.y0 > y0_min) & (a.y_hit < 0)
        down = (a.y0 < -y0_min) & (a.y_hit > 0)
        return int(np.sum(up | down))

    def crossing_fraction(self, y0_min: float = 0.3) -> float:
        """Fraction of arrivals started at ``y0 > y0_min`` that land at ``y < 0``."""
        a = self.arrivals()
        sel = a.y0 > y0_min
        if not np.any(sel):
            return float("nan")
        return float(np.mean(a.y_hit[sel] < 0))


def gaussian_initial_moments(sigma0: float, p: PhysParams) -> MomentSet:
    """Moments of the minimum-uncertainty Gaussian of width ``sigma0``."""
    if not sigma0 > 0:
        raise DomainError(f"sigma0 must be > 0, got {sigma0!r}")
    return MomentSet(g20=sigma0 * sigma0, g11=0.0, g02=p.hbar * p.hbar / (4.0 * sigma0 * sigma0))


def sample_y0(cfg: EnsembleConfig) -> np.ndarray:
    lo, hi = cfg.y_range
    if cfg.sampler == "grid":
        if cfg.n == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, cfg.n)
    rng = np.random.default_rng(cfg.seed)
    if cfg.sampler == "uniform":
        return rng.uniform(lo, hi, cfg.n)
    sigma = cfg.sy0 if cfg.sigma is None else cfg.sigma
    out = np.empty(0)
    # truncated normal by rejection; deterministic for a given seed
    while out.size < cfg.n:
        draw = rng.normal(0.0, sigma, 2 * (cfg.n - out.size) + 16)
        out = np.concatenate([out, draw[(draw >= lo) & (draw <= hi)]])
    return out[: cfg.n]


def _effective_params(cfg: EnsembleConfig, p: PhysParams) -> PhysParams:
    return validate_params(p if cfg.u is None else p.replace(u=cfg.u))


def build_ics(cfg: EnsembleConfig, p: PhysParams, y0: Optional[np.ndarray] = None) -> list[PhaseState]:
    """Initial states with zero dispersion momenta (G11 = 0).

    ``y0`` defaults to the configured sampler's draw.
    """
    _effective_params(cfg, p)
    ys = sample_y0(cfg) if y0 is None else np.asarray(y0, dtype=float)
    mx = gaussian_initial_moments(cfg.sx0, p)
    my = gaussian_initial_moments(cfg.sy0, p)
    sx, psx = math.sqrt(mx.g20), mx.g11 / math.sqrt(mx.g20)
    sy, psy = math.sqrt(my.g20), my.g11 / math.sqrt(my.g20)
    return [
        PhaseState(0.0, cfg.x0, float(y), cfg.px0, cfg.py0, sx, psx, sy, psy) for y in ys
    ]


def run_ensemble(
    cfg: EnsembleConfig,
    p: PhysParams,
    icfg: IntegratorConfig = IntegratorConfig(),
    kind: PotentialKind = PotentialKind.double_slit(),
    workers: int = 1,
    retain: bool = False,
    y0: Optional[np.ndarray] = None,
) -> EnsembleResult:
    """Integrate every initial condition independently.

    Results are in input order whatever ``workers`` is; a particle whose
    integration fails becomes a ``Failure`` record instead of aborting.
    """
    pe = _effective_params(cfg, p)
    ys = sample_y0(cfg) if y0 is None else np.asarray(y0, dtype=float)
    states = build_ics(cfg, pe, ys)

    def one(st: PhaseState):
        try:
            return integrate(st, pe, icfg, kind=kind, record=retain)
        except StiffnessError as exc:
            return Failure(str(exc), exc.last_state)

    if workers <= 1:
        done = [one(st) for st in states]
    else:
        # compiled kernels release the GIL, so threads run concurrently
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(one, states))

    outcomes = [d if isinstance(d, Failure) else d.outcome for d in done]
    counts = Counter(o.name for o in outcomes)
    return EnsembleResult(
        y0=ys,
        outcomes=outcomes,
        trajectories=[d if isinstance(d, Trajectory) else None for d in done] if retain else None,
        counts={k: counts.get(k, 0) for k in ("arrival", "reflected", "timeout", "failed")},
    )
