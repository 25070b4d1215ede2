"""Self-checks against independent oracles: finite differences of the
Hamiltonian, closed-form free and harmonic dispersion, parity, energy drift."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dynamics import grad_check
from .integrate import IntegratorConfig, integrate
from .model import PhaseState, PhysParams
from .potential import PotentialKind

__all__ = [
    "Check",
    "random_states",
    "free_dispersion",
    "harmonic_dispersion_sq",
    "run_validation",
]

# reference beam: source plane, straight at the barrier
X0, PX0, S0 = 400.0, -5000.0, 0.2


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.threshold)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.3e} (< {self.threshold:.1e})"


def random_states(n: int, seed: int = 0) -> list[PhaseState]:
    """States spread over the barrier region and the beam's momentum range."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(
            PhaseState(
                0.0,
                rng.uniform(-5.0, 5.0),
                rng.uniform(-4.0, 4.0),
                rng.uniform(-5500.0, -4500.0),
                rng.uniform(-200.0, 200.0),
                rng.uniform(0.05, 1.0),
                rng.uniform(-50.0, 50.0),
                rng.uniform(0.05, 1.0),
                rng.uniform(-50.0, 50.0),
            )
        )
    return out


def free_dispersion(t, s0: float, u: float, m: float = 1.0):
    """s(t) for a free packet released with ps = 0."""
    return np.sqrt(s0 * s0 + u / (m * m * s0 * s0) * np.square(t))


def harmonic_dispersion_sq(t, s0: float, u: float, omega_h: float, m: float = 1.0):
    """s(t)^2 in an oscillator of frequency omega_h, released with ps = 0."""
    wt = omega_h * np.asarray(t)
    return s0 * s0 * np.cos(wt) ** 2 + u / (m * m * omega_h**2 * s0 * s0) * np.sin(wt) ** 2


def _source(y0: float) -> PhaseState:
    return PhaseState(0.0, X0, y0, PX0, 0.0, S0, 0.0, S0, 0.0)


def run_validation(
    p: PhysParams = PhysParams(),
    icfg: IntegratorConfig = IntegratorConfig(),
    rhs: Optional[Callable] = None,
) -> list[Check]:
    checks = []

    worst = max(grad_check(st, p, rhs=rhs) for st in random_states(100))
    checks.append(Check("gradient identity, 100 barrier-region states", worst, 1e-5))
    checks.append(Check("gradient identity, force-free source state", grad_check(_source(0.0), p, rhs=rhs), 1e-10))
    centre = PhaseState(0.0, 0.0, 0.0, PX0, 0.0, S0, 0.0, S0, 0.0)
    checks.append(Check("gradient identity, barrier centre", grad_check(centre, p, rhs=rhs), 1e-5))

    free = integrate(_source(0.0), p, icfg, kind=PotentialKind.free())
    o = free.outcome
    t_free = (X0 - icfg.x_screen) / abs(PX0 / p.m)
    checks.append(Check("free flight arrival time", abs(o.state.t - t_free), 1e-9))
    s_exact = float(free_dispersion(o.state.t, S0, p.u, p.m))
    checks.append(Check("free-particle dispersion s(t_hit)", abs(o.state.sx - s_exact), 1e-8))

    omega_h = 1.0
    periods = 5
    hcfg = IntegratorConfig(
        rtol=icfg.rtol, atol=icfg.atol, h0=icfg.h0, h_max=1.0,
        t_max=periods * 2 * math.pi / omega_h, x_screen=-1e6, x_reflect=1e6,
    )
    osc = integrate(
        PhaseState(0.0, 0.0, 0.0, 0.0, 0.0, S0, 0.0, S0, 0.0), p, hcfg,
        kind=PotentialKind.harmonic(omega_h),
    )
    exact = harmonic_dispersion_sq(osc.t, S0, p.u, omega_h, p.m)
    checks.append(Check("harmonic dispersion, 5 periods", float(np.max(np.abs(osc.z[:, 4] ** 2 - exact))), 1e-6))

    up = integrate(_source(0.3), p, icfg)
    down = integrate(_source(-0.3), p, icfg)
    if len(up) == len(down) and np.array_equal(up.t, down.t):
        mirror = float(np.max(np.abs(up.z[:, 1] + down.z[:, 1])))
    else:
        mirror = math.inf
    checks.append(Check("mirror pair y-series antisymmetry", mirror, 1e-8))
    axis = integrate(_source(0.0), p, icfg)
    checks.append(Check("on-axis particle stays on axis", float(np.max(np.abs(axis.z[:, 1]))), 1e-6))

    checks.append(Check("energy drift, barrier crossing y0=0.3", up.energy_drift(), 1e-6))
    return checks
