"""Core value types and moment/canonical conversions.

Second-order moments of one axis are ``G20 = <(x-<x>)^2>``, ``G11`` (Weyl
ordered) and ``G02``.  The canonical dispersion variables are

    s  = sqrt(G20)
    ps = G11 / sqrt(G20)
    U  = G20 * G02 - G11**2

with ``U >= hbar**2 / 4`` (Heisenberg).  ``U`` is a constant of motion of the
second-order dynamics and is stored with the physical parameters.
"""

from __future__ import annotations

import math
import sys
from dataclasses import astuple, dataclass, fields
from fractions import Fraction

import numpy as np

__all__ = [
    "SlitMomentsError",
    "DomainError",
    "HeisenbergViolation",
    "ParameterError",
    "PhysParams",
    "PhaseState",
    "MomentSet",
    "STATE_FIELDS",
    "moments_from_canonical",
    "canonical_from_moments",
    "validate_params",
]

# Order of the 8 phase-space components in every packed state vector.
STATE_FIELDS = ("x", "y", "px", "py", "sx", "psx", "sy", "psy")


class SlitMomentsError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SlitMomentsError, ValueError):
    """An argument lies outside the domain of the operation."""


class HeisenbergViolation(DomainError):
    """Moments or Casimir below the uncertainty bound hbar**2/4."""


class ParameterError(DomainError):
    """A physical parameter violates its invariant.

    ``field`` names the offending parameter.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class PhysParams:
    """Physical constants in dimensionless code units (hbar = 1 by default).

    Defaults are the double-slit parameters m=1, omega=1e4, V0=1e7,
    alpha=1.5 together with the saturated Casimir U = hbar**2/4.
    """

    m: float = 1.0
    omega: float = 1.0e4
    v0: float = 1.0e7
    alpha: float = 1.5
    hbar: float = 1.0
    u: float = 0.25

    @property
    def heisenberg_bound(self) -> float:
        return 0.25 * self.hbar * self.hbar

    @property
    def saturated(self) -> bool:
        """True when ``u`` sits on the Heisenberg bound."""
        return math.isclose(self.u, self.heisenberg_bound, rel_tol=1e-12, abs_tol=0.0)

    def replace(self, **changes) -> "PhysParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return PhysParams(**values)


def validate_params(p: PhysParams) -> PhysParams:
    """Check every invariant of ``p`` and return it unchanged.

    Raises ParameterError naming the first violated field, or
    HeisenbergViolation (also carrying ``field='u'``) for ``u < hbar**2/4``.
    """
    for name in ("m", "omega", "v0", "alpha", "hbar"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value > 0.0):
            raise ParameterError(name, f"must be finite and > 0, got {value!r}")
    if not math.isfinite(p.u):
        raise ParameterError("u", f"must be finite, got {p.u!r}")
    if p.u < p.heisenberg_bound and not p.saturated:
        err = HeisenbergViolation(
            f"u: {p.u!r} below Heisenberg bound hbar^2/4 = {p.heisenberg_bound!r}"
        )
        err.field = "u"
        raise err
    return p


@dataclass(frozen=True)
class PhaseState:
    """One point of the 8-dimensional semiclassical phase space at time t."""

    t: float
    x: float
    y: float
    px: float
    py: float
    sx: float
    psx: float
    sy: float
    psy: float

    def __post_init__(self):
        values = astuple(self)
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"non-finite phase state {values}")
        if self.sx <= 0.0 or self.sy <= 0.0:
            raise DomainError(f"dispersions must be > 0, got sx={self.sx}, sy={self.sy}")

    def to_array(self) -> np.ndarray:
        """Pack into a float64 vector ordered as STATE_FIELDS."""
        return np.array([getattr(self, k) for k in STATE_FIELDS], dtype=np.float64)

    @classmethod
    def from_array(cls, t: float, z) -> "PhaseState":
        return cls(float(t), *(float(v) for v in z))

    def mirrored(self) -> "PhaseState":
        """Image under the parity (y, py) -> (-y, -py)."""
        return PhaseState(
            self.t, self.x, -self.y, self.px, -self.py, self.sx, self.psx, self.sy, self.psy
        )


@dataclass(frozen=True)
class MomentSet:
    """Second-order central moments of a single axis."""

    g20: float
    g11: float
    g02: float

    @property
    def uncertainty_product(self) -> float:
        return self.g20 * self.g02 - self.g11 * self.g11


def moments_from_canonical(s: float, ps: float, u: float) -> MomentSet:
    if not s > 0.0:
        raise DomainError(f"s must be > 0, got {s!r}")
    if not u > 0.0:
        raise DomainError(f"u must be > 0, got {u!r}")
    return MomentSet(g20=s * s, g11=ps * s, g02=u / (s * s) + ps * ps)


def canonical_from_moments(ms: MomentSet, hbar: float = 1.0) -> tuple[float, float, float]:
    """Return ``(s, ps, u)`` for one axis.

    Raises HeisenbergViolation if the moments fall below ``hbar**2/4``.
    """
    if not ms.g20 > 0.0:
        raise DomainError(f"g20 must be > 0, got {ms.g20!r}")
    s = math.sqrt(ms.g20)
    ps = ms.g11 / s
    # exact in rationals, rounded once: g20*g02 and g11**2 nearly cancel
    # whenever ps*s dominates sqrt(u)
    u = float(Fraction(ms.g20) * Fraction(ms.g02) - Fraction(ms.g11) ** 2)
    bound = 0.25 * hbar * hbar
    # the inputs are themselves rounded, so u is only known to within a few
    # ulps of the products it was cancelled from
    slack = max(1e-12 * bound, 4.0 * sys.float_info.epsilon * (ms.g20 * ms.g02 + ms.g11 * ms.g11))
    if u < bound - slack:
        raise HeisenbergViolation(f"g20*g02 - g11^2 = {u!r} < hbar^2/4 = {bound!r}")
    return s, ps, u
