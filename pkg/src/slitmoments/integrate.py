"""Adaptive Dormand-Prince 5(4) integration with dense output and events.

A trajectory ends at the first of

* ``x`` crossing ``x_screen`` while moving towards it   -> Arrival
* ``x`` crossing ``x_reflect`` while moving back        -> Reflected
* ``t`` reaching ``t_max``                               -> Timeout

Event times are located on the continuous extension of the accepted step and
then polished with true Runge-Kutta sub-steps, so the terminal state lies on
the event plane to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numba import njit

from .dynamics import _rhs, hamiltonian_series, pack_params
from .model import PhaseState, PhysParams, SlitMomentsError, validate_params
from .potential import PotentialKind

__all__ = [
    "IntegratorConfig",
    "Arrival",
    "Reflected",
    "Timeout",
    "Outcome",
    "Trajectory",
    "StiffnessError",
    "RangeError",
    "integrate",
    "integrate_1d",
    "interpolate",
]

# status codes returned by the compiled driver
ST_ARRIVAL, ST_REFLECTED, ST_TIMEOUT, ST_STIFF, ST_MAXSTEPS = range(5)

H_MIN = 1e-15

# Dormand & Prince (1980) tableau, FSAL
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
A71, A73, A74, A75, A76 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# Shampine's continuous extension
D1, D3, D4, D5, D6, D7 = (
    -12715105075.0 / 11282082432.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
)

# PI step-size control (Hairer, Norsett & Wanner)
SAFE, FAC_MIN, FAC_MAX, BETA = 0.9, 0.2, 10.0, 0.04
EXPO1 = 0.2 - BETA * 0.75


@njit(cache=True, nogil=True)
def _step(z, k1, h, prm, kind, k2, k3, k4, k5, k6, k7, ytmp, znew):
    """One DOPRI5 step of size h from (z, k1); fills znew, k7 = f(znew)."""
    n = z.shape[0]
    for i in range(n):
        ytmp[i] = z[i] + h * A21 * k1[i]
    _rhs(ytmp, prm, kind, k2)
    for i in range(n):
        ytmp[i] = z[i] + h * (A31 * k1[i] + A32 * k2[i])
    _rhs(ytmp, prm, kind, k3)
    for i in range(n):
        ytmp[i] = z[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    _rhs(ytmp, prm, kind, k4)
    for i in range(n):
        ytmp[i] = z[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    _rhs(ytmp, prm, kind, k5)
    for i in range(n):
        ytmp[i] = z[i] + h * (
            A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
        )
    _rhs(ytmp, prm, kind, k6)
    for i in range(n):
        znew[i] = z[i] + h * (
            A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]
        )
    _rhs(znew, prm, kind, k7)


@njit(cache=True, nogil=True)
def _dense_coeffs(z, znew, h, k1, k3, k4, k5, k6, k7, out):
    for i in range(z.shape[0]):
        dz = znew[i] - z[i]
        bspl = h * k1[i] - dz
        out[0, i] = z[i]
        out[1, i] = dz
        out[2, i] = bspl
        out[3, i] = dz - h * k7[i] - bspl
        out[4, i] = h * (
            D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]
        )


@njit(cache=True, nogil=True)
def _dense_eval(rc, theta, i):
    t1 = 1.0 - theta
    return rc[0, i] + theta * (rc[1, i] + t1 * (rc[2, i] + theta * (rc[3, i] + t1 * rc[4, i])))


@njit(cache=True, nogil=True)
def _locate(rc, plane, g0, g1):
    """Root of x(theta) = plane on [0, 1] by the Illinois method."""
    a, b = 0.0, 1.0
    fa, fb = g0, g1
    side = 0
    c = 1.0
    for _ in range(200):
        c = (a * fb - b * fa) / (fb - fa)
        fc = _dense_eval(rc, c, 0) - plane
        if fc == 0.0 or abs(b - a) < 1e-16:
            break
        if (fc > 0.0) == (fb > 0.0):
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
    return c


@njit(cache=True, nogil=True)
def _grow(ts, zs, dense, n):
    cap = ts.shape[0] * 2
    ts2 = np.empty(cap)
    zs2 = np.empty((cap, zs.shape[1]))
    dense2 = np.empty((cap, 5, zs.shape[1]))
    ts2[:n] = ts[:n]
    zs2[:n] = zs[:n]
    dense2[:n] = dense[:n]
    return ts2, zs2, dense2


@njit(cache=True, nogil=True)
def _admissible(z, disp):
    for i in range(z.shape[0]):
        if not math.isfinite(z[i]):
            return False
    for j in range(disp.shape[0]):
        if not z[disp[j]] > 0.0:
            return False
    return True


@njit(cache=True, nogil=True)
def _drive(z0, t0, prm, kind, disp, rtol, atol, h0, hmax, tmax, x_screen, x_reflect,
           record, max_steps):
    n = z0.shape[0]
    cap = 1024 if record else 4
    ts = np.empty(cap)
    zs = np.empty((cap, n))
    dense = np.empty((cap, 5, n))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    znew = np.empty(n)
    zev = np.empty(n)
    kev = np.empty(n)
    rc = np.empty((5, n))

    z = z0.copy()
    t = t0
    _rhs(z, prm, kind, k1)
    nfev = 1
    ts[0] = t
    zs[0] = z
    count = 1
    h = min(h0, hmax, tmax - t)
    facold = 1e-4
    last_rejected = False
    naccept = 0
    nreject = 0
    status = ST_TIMEOUT

    while True:
        if naccept + nreject >= max_steps:
            status = ST_MAXSTEPS
            break
        if h < H_MIN:
            status = ST_STIFF
            break
        final = False
        if t + h >= tmax:
            h = tmax - t
            final = True

        _step(z, k1, h, prm, kind, k2, k3, k4, k5, k6, k7, ytmp, znew)
        nfev += 6
        if not (_admissible(znew, disp) and _admissible(k7, disp[:0])):  # k7: finiteness only
            # dispersion collapse or overflow: shrink hard and retry
            nreject += 1
            h *= 0.25
            last_rejected = True
            continue

        err = 0.0
        for i in range(n):
            sk = atol + rtol * max(abs(z[i]), abs(znew[i]))
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            err += (e / sk) ** 2
        err = math.sqrt(err / n)

        fac11 = err**EXPO1
        fac = fac11 / facold**BETA
        fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFE))
        hnew = h / fac

        if err > 1.0:
            nreject += 1
            h = h / min(1.0 / FAC_MIN, fac11 / SAFE)
            last_rejected = True
            continue

        naccept += 1
        facold = max(err, 1e-4)
        tnew = tmax if final else t + h

        # events: screen approached from above, source plane left moving out
        event = -1
        plane = 0.0
        if z[0] > x_screen and znew[0] <= x_screen and k7[0] < 0.0:
            event = ST_ARRIVAL
            plane = x_screen
        elif z[0] < x_reflect and znew[0] >= x_reflect and k7[0] > 0.0:
            event = ST_REFLECTED
            plane = x_reflect

        if event >= 0:
            _dense_coeffs(z, znew, h, k1, k3, k4, k5, k6, k7, rc)
            theta = _locate(rc, plane, z[0] - plane, znew[0] - plane)
            hev = theta * h
            # polish with genuine sub-steps so the terminal state is on-plane
            for _ in range(4):
                _step(z, k1, hev, prm, kind, k2, k3, k4, k5, k6, kev, ytmp, zev)
                nfev += 6
                resid = zev[0] - plane
                if abs(resid) <= 1e-13 * max(1.0, abs(plane)) or kev[0] == 0.0:
                    break
                hev -= resid / kev[0]
            _dense_coeffs(z, zev, hev, k1, k3, k4, k5, k6, kev, rc)
            if count + 1 >= ts.shape[0]:
                ts, zs, dense = _grow(ts, zs, dense, count)
            idx = count if record else 1
            dense[idx - 1] = rc
            ts[idx] = t + hev
            zs[idx] = zev
            count = idx + 1
            status = event
            break

        if record:
            if count + 1 >= ts.shape[0]:
                ts, zs, dense = _grow(ts, zs, dense, count)
            _dense_coeffs(z, znew, h, k1, k3, k4, k5, k6, k7, rc)
            dense[count - 1] = rc
            ts[count] = tnew
            zs[count] = znew
            count += 1
        t = tnew
        for i in range(n):
            z[i] = znew[i]
            k1[i] = k7[i]
        if final:
            status = ST_TIMEOUT
            break
        if last_rejected:
            hnew = min(hnew, h)
        last_rejected = False
        h = min(hnew, hmax)

    if count == 1 and t != ts[0]:
        # nothing recorded: keep the last accepted state as the terminal sample
        ts[1] = t
        zs[1] = z
        count = 2
    return status, ts[:count].copy(), zs[:count].copy(), dense[: max(count - 1, 0)].copy(), \
        naccept, nreject, nfev


class StiffnessError(SlitMomentsError, RuntimeError):
    """Step size collapsed; ``last_state`` is the last accepted state."""

    def __init__(self, message: str, last_state: Optional[PhaseState]):
        super().__init__(message)
        self.last_state = last_state


class RangeError(SlitMomentsError, ValueError):
    """Requested time lies outside the trajectory."""


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-9
    atol: float = 1e-12
    h0: float = 1e-6
    # must stay below the barrier transit time alpha/|v| or steps can skip it
    h_max: float = 1e-4
    t_max: float = 1.0
    x_screen: float = -350.0
    x_reflect: float = 400.0
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be > 0")
        if not (self.h0 > 0 and self.h_max > 0):
            raise ValueError("h0 and h_max must be > 0")
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        if not self.x_screen < 0.0 < self.x_reflect:
            raise ValueError("require x_screen < 0 < x_reflect")


@dataclass(frozen=True)
class Arrival:
    y_hit: float
    t_hit: float
    state: PhaseState
    name = "arrival"


@dataclass(frozen=True)
class Reflected:
    t_exit: float
    state: PhaseState
    name = "reflected"


@dataclass(frozen=True)
class Timeout:
    state: PhaseState
    name = "timeout"


Outcome = Union[Arrival, Reflected, Timeout]


@dataclass
class Trajectory:
    """Accepted-step samples of one integration.

    ``dense[i]`` holds the continuous-extension coefficients on
    ``[t[i], t[i+1]]`` (``None`` when only end points were kept).
    """

    t: np.ndarray
    z: np.ndarray
    outcome: Outcome
    params: PhysParams
    kind: PotentialKind
    dense: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> PhaseState:
        return PhaseState.from_array(self.t[i], self.z[i])

    def states(self) -> list[PhaseState]:
        return [self.state(i) for i in range(len(self.t))]

    def hamiltonian(self) -> np.ndarray:
        return hamiltonian_series(self.z, self.params, self.kind)

    def energy_drift(self) -> float:
        """Max relative deviation of H_Q from its initial value."""
        hq = self.hamiltonian()
        return float(np.max(np.abs(hq - hq[0])) / abs(hq[0]))

    def interpolate(self, t: float) -> PhaseState:
        return interpolate(self, t)


def _outcome(status: int, t: np.ndarray, z: np.ndarray) -> Outcome:
    end = PhaseState.from_array(t[-1], z[-1])
    if status == ST_ARRIVAL:
        return Arrival(y_hit=end.y, t_hit=end.t, state=end)
    if status == ST_REFLECTED:
        return Reflected(t_exit=end.t, state=end)
    return Timeout(state=end)


def _run(z0, t0, p, kind, cfg, disp, record, x_screen, x_reflect):
    prm = pack_params(p, kind)
    status, t, z, dense, nacc, nrej, nfev = _drive(
        z0, float(t0), prm, kind.code, disp, cfg.rtol, cfg.atol, cfg.h0, cfg.h_max,
        t0 + cfg.t_max, x_screen, x_reflect, record, cfg.max_steps,
    )
    stats = {"accepted": int(nacc), "rejected": int(nrej), "nfev": int(nfev)}
    return status, t, z, dense, stats


def integrate(
    st0: PhaseState,
    p: PhysParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    kind: PotentialKind = PotentialKind.double_slit(),
    record: bool = True,
) -> Trajectory:
    """Integrate the 8-D flow from ``st0`` to its first terminal event.

    With ``record=False`` only the initial and terminal states are kept,
    which is what large ensembles want.
    """
    validate_params(p)
    if not cfg.x_screen < st0.x <= cfg.x_reflect:
        raise ValueError(
            f"initial x={st0.x} must lie in (x_screen, x_reflect] = ({cfg.x_screen}, {cfg.x_reflect}]"
        )
    z0 = st0.to_array()
    status, t, z, dense, stats = _run(
        z0, st0.t, p, kind, cfg, np.array([4, 6]), record, cfg.x_screen, cfg.x_reflect
    )
    if status in (ST_STIFF, ST_MAXSTEPS):
        last = PhaseState.from_array(t[-1], z[-1])
        reason = "step size underflow" if status == ST_STIFF else "step budget exhausted"
        raise StiffnessError(f"{reason} at t={t[-1]!r}", last)
    return Trajectory(
        t=t, z=z, outcome=_outcome(status, t, z), params=p, kind=kind,
        dense=dense if record else None, stats=stats,
    )


def integrate_1d(
    x0: float,
    px0: float,
    s0: float,
    ps0: float,
    p: PhysParams,
    kind: PotentialKind,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    h_max: float = math.inf,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate the 1-D flow ``(x, px, s, ps)`` over ``[0, t_end]``.

    Returns ``(t, z, dense)`` at accepted steps; no events.
    """
    if kind.tag == "double_slit":
        raise ValueError("1-D integration supports only free and harmonic potentials")
    cfg = IntegratorConfig(rtol=rtol, atol=atol, h_max=h_max if math.isfinite(h_max) else t_end,
                           t_max=t_end)
    z0 = np.array([x0, px0, s0, ps0], dtype=np.float64)
    status, t, z, dense, _ = _run(z0, 0.0, p, kind, cfg, np.array([2]), True, -math.inf, math.inf)
    if status != ST_TIMEOUT:
        raise StiffnessError(f"1-D integration failed at t={t[-1]!r}", None)
    return t, z, dense


def interpolate(traj: Trajectory, t: float) -> PhaseState:
    """State at time ``t`` from the stored continuous extension.

    Falls back to cubic Hermite on stored states and freshly evaluated
    derivatives when the trajectory kept no dense coefficients.
    """
    ts = traj.t
    if not ts[0] <= t <= ts[-1]:
        raise RangeError(f"t={t!r} outside [{ts[0]!r}, {ts[-1]!r}]")
    i = int(np.searchsorted(ts, t, side="right")) - 1
    if i >= len(ts) - 1 or ts[i] == t:
        i = min(i, len(ts) - 1)
        return PhaseState.from_array(t, traj.z[i])
    h = ts[i + 1] - ts[i]
    theta = (t - ts[i]) / h
    if traj.dense is not None:
        rc = traj.dense[i]
        t1 = 1.0 - theta
        z = rc[0] + theta * (rc[1] + t1 * (rc[2] + theta * (rc[3] + t1 * rc[4])))
        return PhaseState.from_array(t, z)
    prm = pack_params(traj.params, traj.kind)
    f0 = np.empty(8)
    f1 = np.empty(8)
    _rhs(traj.z[i], prm, traj.kind.code, f0)
    _rhs(traj.z[i + 1], prm, traj.kind.code, f1)
    z0, z1 = traj.z[i], traj.z[i + 1]
    h00 = 2 * theta**3 - 3 * theta**2 + 1
    h10 = theta**3 - 2 * theta**2 + theta
    h01 = -2 * theta**3 + 3 * theta**2
    h11 = theta**3 - theta**2
    z = h00 * z0 + h10 * h * f0 + h01 * z1 + h11 * h * f1
    return PhaseState.from_array(t, z)
