"""Semiclassical double-slit trajectories in moment variables.

Each particle carries its centroid (x, y, px, py) and, per axis, the packet
width s and its conjugate momentum ps.  Widths feel the barrier through a
four-point average of the potential and are held open by the uncertainty
term U/(2m s^2).
"""

from .analysis import (
    FraunhoferSpec,
    Histogram,
    HistogramSpec,
    arrival_times,
    belt,
    fraunhofer_reference,
    fringe_score,
    histogram,
    interference_report,
    snapshot,
)
from .dynamics import grad_check, hamiltonian_2d, rhs_2d
from .ensemble import EnsembleConfig, EnsembleResult, build_ics, run_ensemble
from .integrate import (
    Arrival,
    IntegratorConfig,
    Reflected,
    StiffnessError,
    Timeout,
    Trajectory,
    integrate,
    integrate_1d,
    interpolate,
)
from .model import (
    DomainError,
    HeisenbergViolation,
    MomentSet,
    ParameterError,
    PhaseState,
    PhysParams,
    canonical_from_moments,
    moments_from_canonical,
    validate_params,
)
from .potential import PotentialKind, slit_centers, slit_width, v_slit

__version__ = "0.1.0"
