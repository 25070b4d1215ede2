"""Double-slit barrier, validation potentials and slit geometry.

The barrier is

    V(x, y) = (V0 - m w^2 y^2 / 2 + m^2 w^4 y^4 / (16 V0)) exp(-(x/alpha)^2)

whose transverse prefactor is the perfect square V0 (1 - m w^2 y^2 / (4 V0))^2.
It vanishes at y = +-2 sqrt(V0 / (m w^2)), the slit centres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import DomainError, PhysParams

__all__ = [
    "DOUBLE_SLIT",
    "FREE",
    "HARMONIC",
    "PotentialKind",
    "SlitGeometry",
    "v_slit",
    "slit_centers",
    "slit_width",
    "probe_energy",
    "v_validation",
]

# integer tags understood by the compiled kernels
DOUBLE_SLIT = 0
FREE = 1
HARMONIC = 2

_TAGS = {"double_slit": DOUBLE_SLIT, "free": FREE, "harmonic": HARMONIC}


@dataclass(frozen=True)
class PotentialKind:
    """Which potential drives the dynamics.

    ``harmonic`` is the isotropic oscillator 1/2 m omega_h^2 (x^2 + y^2); it
    and ``free`` exist to validate the integrator against closed forms.
    """

    tag: str = "double_slit"
    omega_h: float = 0.0

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise DomainError(f"unknown potential {self.tag!r}; expected one of {sorted(_TAGS)}")
        if self.tag == "harmonic" and not self.omega_h > 0.0:
            raise DomainError(f"harmonic potential requires omega_h > 0, got {self.omega_h!r}")

    @classmethod
    def double_slit(cls) -> "PotentialKind":
        return cls("double_slit")

    @classmethod
    def free(cls) -> "PotentialKind":
        return cls("free")

    @classmethod
    def harmonic(cls, omega_h: float) -> "PotentialKind":
        return cls("harmonic", float(omega_h))

    @property
    def code(self) -> int:
        return _TAGS[self.tag]


@dataclass(frozen=True)
class SlitGeometry:
    y_slit: float
    d: float
    a_width: Optional[float] = None


def v_slit(x, y, p: PhysParams):
    """Evaluate the barrier; accepts scalars or broadcastable arrays."""
    c = p.m * p.omega**2 / (4.0 * p.v0)
    q = 1.0 - c * np.square(y)
    out = p.v0 * q * q * np.exp(-np.square(np.asarray(x, dtype=float) / p.alpha))
    return float(out) if np.ndim(out) == 0 else out


def slit_centers(p: PhysParams) -> SlitGeometry:
    y_slit = 2.0 * math.sqrt(p.v0 / (p.m * p.omega**2))
    return SlitGeometry(y_slit=y_slit, d=2.0 * y_slit)


def slit_width(p: PhysParams, e_probe: float) -> float:
    """Full width of one opening at ``x = 0`` where ``V(0, y) < e_probe``.

    With r = sqrt(e_probe / V0) the opening is y_slit * [sqrt(1-r), sqrt(1+r)].
    At e_probe >= V0 the two openings merge through y = 0 and no single-slit
    width exists.
    """
    if not 0.0 < e_probe < p.v0:
        raise DomainError(f"probe energy must lie in (0, V0={p.v0!r}), got {e_probe!r}")
    r = math.sqrt(e_probe / p.v0)
    y_slit = slit_centers(p).y_slit
    return y_slit * (math.sqrt(1.0 + r) - math.sqrt(1.0 - r))


def probe_energy(p: PhysParams, px0: float) -> float:
    """Energy at which the slit width is read for the far-field reference.

    The beam kinetic energy when it is below the barrier saddle V0;
    otherwise half the saddle height (the openings merge above V0).
    """
    kinetic = px0 * px0 / (2.0 * p.m)
    return kinetic if kinetic < p.v0 else 0.5 * p.v0


def v_validation(kind: PotentialKind, x, p: PhysParams):
    """1-D validation potential (free or harmonic)."""
    if kind.tag == "free":
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
    if kind.tag == "harmonic":
        return 0.5 * p.m * kind.omega_h**2 * np.square(x)
    raise DomainError("v_validation supports only free and harmonic potentials")
