import math

import numpy as np
import pytest

from slitmoments.integrate import (
    Arrival,
    IntegratorConfig,
    RangeError,
    Reflected,
    StiffnessError,
    Timeout,
    integrate,
    integrate_1d,
    interpolate,
)
from slitmoments.model import PhaseState, PhysParams
from slitmoments.potential import PotentialKind
from slitmoments.validation import free_dispersion, harmonic_dispersion_sq

P = PhysParams()
FREE = PotentialKind.free()


def source(y0=0.0, py0=0.0):
    return PhaseState(0.0, 400.0, y0, -5000.0, py0, 0.2, 0.0, 0.2, 0.0)


@pytest.fixture(scope="module")
def crossing():
    return integrate(source(0.3), P)


def test_on_axis_arrival():
    traj = integrate(source(0.0), P)
    o = traj.outcome
    assert isinstance(o, Arrival)
    assert abs(o.y_hit) < 1e-6
    assert o.t_hit >= 0.15
    assert o.state.x == pytest.approx(-350.0, abs=1e-9)


def test_free_flight_closed_form():
    traj = integrate(source(0.0), P, kind=FREE)
    o = traj.outcome
    assert abs(o.t_hit - 0.15) < 1e-9
    assert o.state.sx == pytest.approx(float(free_dispersion(0.15, 0.2, 0.25)), abs=1e-8)
    assert o.state.sx == pytest.approx(0.425, abs=1e-8)
    # the whole sampled width history, not just the end point
    assert np.max(np.abs(traj.z[:, 4] - free_dispersion(traj.t, 0.2, 0.25))) < 1e-8
    assert np.max(np.abs(traj.z[:, 0] - (400.0 - 5000.0 * traj.t))) < 1e-9


def test_harmonic_1d_five_periods():
    w = 1.0
    t, z, _ = integrate_1d(0.0, 0.0, 0.2, 0.0, P, PotentialKind.harmonic(w), 10 * math.pi / w)
    err = np.max(np.abs(z[:, 2] ** 2 - harmonic_dispersion_sq(t, 0.2, 0.25, w)))
    assert err < 1e-6


def test_heisenberg_product_along_trajectory(crossing):
    z = crossing.z
    for s, ps in ((z[:, 4], z[:, 5]), (z[:, 6], z[:, 7])):
        g20 = s * s
        g11 = ps * s
        g02 = P.u / g20 + ps * ps
        assert np.min(g20 * g02 - g11 * g11) >= 0.25 - 1e-12 * np.max(g20 * g02)


def test_energy_drift(crossing):
    assert crossing.energy_drift() < 1e-6


def test_mirror_pair_exact():
    up = integrate(source(0.7, 12.0), P)
    down = integrate(source(-0.7, -12.0), P)
    assert np.array_equal(up.t, down.t)
    assert np.max(np.abs(up.z[:, 1] + down.z[:, 1])) < 1e-8


def test_determinism():
    a = integrate(source(1.1), P)
    b = integrate(source(1.1), P)
    assert np.array_equal(a.t, b.t) and np.array_equal(a.z, b.z)


def drift_at(rtol):
    return integrate(source(0.3), P, IntegratorConfig(rtol=rtol, atol=rtol * 1e-3)).energy_drift()


def test_drift_shrinks_with_tolerance():
    halvings = [drift_at(1e-7 * 0.5**k) for k in range(7)]
    assert all(b < a for a, b in zip(halvings, halvings[1:]))
    # a decade of tolerance buys at least 4x
    for r in (1e-7, 1e-8, 1e-9):
        assert drift_at(r) / drift_at(0.1 * r) > 4.0


def test_outcomes_are_exclusive():
    reflected = integrate(source(3.0), P)
    assert isinstance(reflected.outcome, Reflected)
    assert reflected.outcome.state.x == pytest.approx(400.0, abs=1e-9)
    short = integrate(source(0.0), P, IntegratorConfig(t_max=0.01))
    assert isinstance(short.outcome, Timeout)
    assert short.t[-1] == pytest.approx(0.01, abs=1e-15)
    for traj in (reflected, short):
        x = traj.z[:-1, 0]
        assert np.all((x > -350.0) & (x <= 400.0))


def test_interpolate_at_samples(crossing):
    for i in (0, 17, len(crossing) // 2, len(crossing) - 1):
        got = interpolate(crossing, crossing.t[i])
        assert np.array_equal(got.to_array(), crossing.z[i])


def test_interpolate_free_flight_linear():
    traj = integrate(source(0.0), P, kind=FREE)
    ts = np.linspace(0.0, traj.t[-1], 37)
    for t in ts:
        assert abs(traj.interpolate(t).x - (400.0 - 5000.0 * t)) < 1e-9


def test_interpolate_midpoint_against_refinement(crossing):
    # restart from the stored sample so only the interpolant is under test
    cfg = IntegratorConfig()
    idx = np.flatnonzero(np.abs(crossing.z[:-1, 0]) < 5.0)
    assert idx.size > 0
    worst = 0.0
    for i in idx[:: max(1, idx.size // 40)]:
        tm = 0.5 * (crossing.t[i] + crossing.t[i + 1])
        ref_cfg = IntegratorConfig(rtol=1e-12, atol=1e-15, h_max=0.5 * cfg.h_max, t_max=tm - crossing.t[i])
        ref = integrate(crossing.state(i), P, ref_cfg)
        assert isinstance(ref.outcome, Timeout)
        a = crossing.interpolate(tm).to_array()
        b = ref.z[-1]
        worst = max(worst, np.max(np.abs(a - b) / (1.0 + np.abs(b))))
    assert worst < 1e-6


def test_interpolate_hermite_fallback(crossing):
    bare = type(crossing)(crossing.t, crossing.z, crossing.outcome, P, crossing.kind)
    i = len(crossing) // 3
    tm = 0.5 * (crossing.t[i] + crossing.t[i + 1])
    a = bare.interpolate(tm).to_array()
    b = crossing.interpolate(tm).to_array()
    assert np.max(np.abs(a - b) / (1.0 + np.abs(b))) < 1e-6


def test_interpolate_out_of_range(crossing):
    with pytest.raises(RangeError):
        interpolate(crossing, -1e-3)
    with pytest.raises(RangeError):
        interpolate(crossing, crossing.t[-1] + 1e-3)


def test_endpoints_only():
    full = integrate(source(0.5), P)
    bare = integrate(source(0.5), P, record=False)
    assert len(bare) == 2
    assert np.array_equal(bare.z[-1], full.z[-1])
    assert bare.outcome == full.outcome


def test_stiffness_error_carries_state():
    with pytest.raises(StiffnessError) as info:
        integrate(source(0.0), P, IntegratorConfig(max_steps=10))
    assert info.value.last_state is not None
    assert info.value.last_state.x < 400.0


def test_start_outside_window():
    with pytest.raises(ValueError):
        integrate(PhaseState(0, 500.0, 0, -5000.0, 0, 0.2, 0, 0.2, 0), P)


@pytest.mark.parametrize(
    "kwargs",
    [dict(rtol=0.0), dict(atol=-1.0), dict(h_max=0.0), dict(t_max=0.0), dict(x_screen=10.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)
