"""Quantum-corrected Hamiltonians and their equations of motion.

2-D Hamiltonian in canonical dispersion variables::

    H = (px^2 + psx^2 + py^2 + psy^2) / 2m + U/(2m sx^2) + U/(2m sy^2)
        + 1/4 * sum_{+-,+-} V(x +- sx, y +- sy)

and its 1-D analogue ``(px^2+ps^2)/2m + U/(2m s^2) + (V(x+s)+V(x-s))/2``.

The right-hand sides below are the analytic symplectic gradients of these
Hamiltonians; ``grad_check`` compares them with central differences of the
Hamiltonian itself.  Packed vectors use the order of ``model.STATE_FIELDS``
for 2-D and ``(x, px, s, ps)`` for 1-D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit

from .model import DomainError, PhaseState, PhysParams
from .potential import FREE, HARMONIC, PotentialKind

__all__ = [
    "StateDerivative",
    "pack_params",
    "hamiltonian_2d",
    "hamiltonian_1d",
    "hamiltonian_terms",
    "hamiltonian_series",
    "rhs_2d",
    "rhs_1d",
    "grad_check",
]

# exp(-a) for a > 700 is below the normal range; treat it as exact zero
EXP_CUTOFF = 700.0

# layout of the packed parameter vector handed to compiled kernels
P_M, P_OMEGA, P_V0, P_ALPHA, P_HBAR, P_U, P_OMEGA_H = range(7)


def pack_params(p: PhysParams, kind: PotentialKind) -> np.ndarray:
    return np.array([p.m, p.omega, p.v0, p.alpha, p.hbar, p.u, kind.omega_h], dtype=np.float64)


@njit(cache=True, nogil=True)
def _gauss(arg):
    a2 = arg * arg
    if a2 > EXP_CUTOFF:
        return 0.0
    return math.exp(-a2)


N_TERMS = 7


@njit(cache=True, nogil=True)
def _terms2d(z, prm, kind, out):
    """Additive pieces of H: four kinetic, two Casimir, one potential."""
    x, y, px, py, sx, psx, sy, psy = z[0], z[1], z[2], z[3], z[4], z[5], z[6], z[7]
    m = prm[P_M]
    u = prm[P_U]
    out[0] = px * px / (2.0 * m)
    out[1] = psx * psx / (2.0 * m)
    out[2] = py * py / (2.0 * m)
    out[3] = psy * psy / (2.0 * m)
    out[4] = u / (2.0 * m * sx * sx)
    out[5] = u / (2.0 * m * sy * sy)
    if kind == FREE:
        out[6] = 0.0
    elif kind == HARMONIC:
        wh = prm[P_OMEGA_H]
        out[6] = 0.5 * m * wh * wh * (x * x + sx * sx + y * y + sy * sy)
    else:
        v0 = prm[P_V0]
        alpha = prm[P_ALPHA]
        c = m * prm[P_OMEGA] * prm[P_OMEGA] / (4.0 * v0)
        ep = _gauss((x + sx) / alpha)
        em = _gauss((x - sx) / alpha)
        qa = 1.0 - c * (y + sy) * (y + sy)
        qb = 1.0 - c * (y - sy) * (y - sy)
        out[6] = 0.25 * (ep + em) * v0 * (qa * qa + qb * qb)


@njit(cache=True, nogil=True)
def _ham2d(z, prm, kind):
    t = np.empty(N_TERMS)
    _terms2d(z, prm, kind, t)
    return ((t[0] + t[2]) + (t[1] + t[3])) + (t[4] + t[5]) + t[6]


@njit(cache=True, nogil=True)
def _rhs2d(z, prm, kind, out):
    x, y, px, py, sx, psx, sy, psy = z[0], z[1], z[2], z[3], z[4], z[5], z[6], z[7]
    m = prm[P_M]
    u = prm[P_U]
    out[0] = px / m
    out[1] = py / m
    out[4] = psx / m
    out[6] = psy / m
    casx = u / (m * sx * sx * sx)
    casy = u / (m * sy * sy * sy)
    if kind == FREE:
        out[2] = 0.0
        out[3] = 0.0
        out[5] = casx
        out[7] = casy
    elif kind == HARMONIC:
        k = m * prm[P_OMEGA_H] * prm[P_OMEGA_H]
        out[2] = -k * x
        out[3] = -k * y
        out[5] = casx - k * sx
        out[7] = casy - k * sy
    else:
        v0 = prm[P_V0]
        alpha = prm[P_ALPHA]
        c = m * prm[P_OMEGA] * prm[P_OMEGA] / (4.0 * v0)
        ep = _gauss((x + sx) / alpha)
        em = _gauss((x - sx) / alpha)
        qa = 1.0 - c * (y + sy) * (y + sy)
        qb = 1.0 - c * (y - sy) * (y - sy)
        # transverse factor summed over y +- sy, in factorised form
        q = v0 * (qa * qa + qb * qb)
        fx = q / (2.0 * alpha * alpha)
        wp = (x + sx) * ep
        wm = (x - sx) * em
        out[2] = fx * (wp + wm)
        out[5] = casx + fx * (wp - wm)
        gy = c * v0 * (ep + em)
        ra = qa * (y + sy)
        rb = qb * (y - sy)
        out[3] = gy * (ra + rb)
        out[7] = casy + gy * (ra - rb)


@njit(cache=True, nogil=True)
def _ham1d(z, prm, kind):
    x, px, s, ps = z[0], z[1], z[2], z[3]
    m = prm[P_M]
    h = (px * px + ps * ps) / (2.0 * m) + prm[P_U] / (2.0 * m * s * s)
    if kind == HARMONIC:
        wh = prm[P_OMEGA_H]
        h += 0.5 * m * wh * wh * (x * x + s * s)
    return h


@njit(cache=True, nogil=True)
def _rhs1d(z, prm, kind, out):
    x, px, s, ps = z[0], z[1], z[2], z[3]
    m = prm[P_M]
    out[0] = px / m
    out[2] = ps / m
    cas = prm[P_U] / (m * s * s * s)
    if kind == HARMONIC:
        k = m * prm[P_OMEGA_H] * prm[P_OMEGA_H]
        out[1] = -k * x
        out[3] = cas - k * s
    else:
        out[1] = 0.0
        out[3] = cas


@njit(cache=True, nogil=True)
def _rhs(z, prm, kind, out):
    if z.shape[0] == 8:
        _rhs2d(z, prm, kind, out)
    else:
        _rhs1d(z, prm, kind, out)


@njit(cache=True, nogil=True)
def _ham_series(zs, prm, kind):
    out = np.empty(zs.shape[0])
    for i in range(zs.shape[0]):
        out[i] = _ham2d(zs[i], prm, kind)
    return out


@dataclass(frozen=True)
class StateDerivative:
    dx: float
    dy: float
    dpx: float
    dpy: float
    dsx: float
    dpsx: float
    dsy: float
    dpsy: float

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.dx, self.dy, self.dpx, self.dpy, self.dsx, self.dpsx, self.dsy, self.dpsy]
        )


_DEFAULT_KIND = PotentialKind.double_slit()


def hamiltonian_2d(st: PhaseState, p: PhysParams, kind: PotentialKind = _DEFAULT_KIND) -> float:
    return float(_ham2d(st.to_array(), pack_params(p, kind), kind.code))


def hamiltonian_terms(
    st: PhaseState, p: PhysParams, kind: PotentialKind = _DEFAULT_KIND
) -> np.ndarray:
    """The additive pieces of ``hamiltonian_2d``.

    Order: px, psx, py, psy kinetic energies, x and y Casimir terms, potential.
    """
    out = np.empty(N_TERMS)
    _terms2d(st.to_array(), pack_params(p, kind), kind.code, out)
    return out


def hamiltonian_series(zs: np.ndarray, p: PhysParams, kind: PotentialKind = _DEFAULT_KIND):
    """H_Q along an (n, 8) array of packed states."""
    zs = np.ascontiguousarray(zs, dtype=np.float64)
    return _ham_series(zs, pack_params(p, kind), kind.code)


def rhs_2d(st: PhaseState, p: PhysParams, kind: PotentialKind = _DEFAULT_KIND) -> StateDerivative:
    out = np.empty(8)
    _rhs2d(st.to_array(), pack_params(p, kind), kind.code, out)
    return StateDerivative(*(float(v) for v in out))


def _check_1d(s: float, kind: PotentialKind):
    if not s > 0.0:
        raise DomainError(f"s must be > 0, got {s!r}")
    if kind.tag == "double_slit":
        raise DomainError("1-D dynamics support only free and harmonic potentials")


def hamiltonian_1d(x, px, s, ps, u, kind: PotentialKind, p: PhysParams) -> float:
    _check_1d(s, kind)
    prm = pack_params(p.replace(u=u), kind)
    return float(_ham1d(np.array([x, px, s, ps], dtype=np.float64), prm, kind.code))


def rhs_1d(x, px, s, ps, u, kind: PotentialKind, p: PhysParams) -> np.ndarray:
    """Return ``(xdot, pxdot, sdot, psdot)``."""
    _check_1d(s, kind)
    prm = pack_params(p.replace(u=u), kind)
    out = np.empty(4)
    _rhs1d(np.array([x, px, s, ps], dtype=np.float64), prm, kind.code, out)
    return out


# (coordinate index, conjugate momentum index) pairs of the packed 2-D state
_CANONICAL_PAIRS = ((0, 2), (1, 3), (4, 5), (6, 7))


def grad_check(
    st: PhaseState,
    p: PhysParams,
    h: float = 1e-6,
    kind: PotentialKind = _DEFAULT_KIND,
    rhs: Optional[Callable[..., StateDerivative]] = None,
) -> float:
    """Max relative mismatch between ``rhs`` and the symplectic gradient of H.

    Each component is a five-point central difference of ``hamiltonian_2d``
    with step ``h * max(1, |z_i|)``.  The Hamiltonian is differenced term by
    term so that a large constant kinetic energy does not swamp small forces.  The
    error per component is ``|rhs_i - fd_i| / (1 + |rhs_i|)``.
    """
    rhs = rhs_2d if rhs is None else rhs
    analytic = rhs(st, p, kind).to_array()
    z = st.to_array()

    def terms(i, delta):
        zz = z.copy()
        zz[i] += delta
        return hamiltonian_terms(PhaseState.from_array(st.t, zz), p, kind)

    grad = np.empty(8)
    for i in range(8):
        step = h * max(1.0, abs(z[i]))
        near = terms(i, step) - terms(i, -step)
        far = terms(i, 2.0 * step) - terms(i, -2.0 * step)
        grad[i] = float(np.sum(8.0 * near - far)) / (12.0 * step)
    fd = np.empty(8)
    for q, pq in _CANONICAL_PAIRS:
        fd[q] = grad[pq]
        fd[pq] = -grad[q]
    return float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(analytic))))
