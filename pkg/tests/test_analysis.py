import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slitmoments.analysis import (
    ConfigurationError,
    EmptyInputError,
    FraunhoferSpec,
    HistogramSpec,
    UndefinedCorrelationError,
    arrival_times,
    belt,
    find_maxima,
    fraunhofer_reference,
    fringe_score,
    histogram,
    interference_report,
    mirror_symmetry_pvalue,
    snapshot,
)
from slitmoments.ensemble import EnsembleConfig, run_ensemble
from slitmoments.integrate import IntegratorConfig, RangeError, integrate
from slitmoments.model import PhaseState, PhysParams
from slitmoments.potential import PotentialKind

P = PhysParams()
FREE = PotentialKind.free()
REF = FraunhoferSpec.from_physics(P, -5000.0, -350.0)


def test_histogram_single_hit():
    h = histogram(np.array([0.0]))
    assert h.counts.size == 120
    assert h.counts.sum() == 1
    assert h.counts[60] == 1
    assert h.edges[60] == pytest.approx(0.0, abs=1e-12)


def test_histogram_mirrored_pair():
    h = histogram(np.array([0.35, -0.35]))
    nz = np.flatnonzero(h.counts)
    assert len(nz) == 2
    assert h.centers[nz[0]] == pytest.approx(-h.centers[nz[1]], abs=1e-12)


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=200))
def test_histogram_keeps_mass(ys):
    h = histogram(np.array(ys))
    assert h.counts.sum() + h.underflow + h.overflow == len(ys) == h.n_arrivals


def test_histogram_smoothing_and_errors():
    h = histogram(np.zeros(10), HistogramSpec(smoothing=0.2))
    assert h.smoothed.sum() == pytest.approx(10.0, rel=1e-6)
    with pytest.raises(EmptyInputError):
        histogram(np.array([]))


def test_fraunhofer_nulls_and_peak():
    spec = FraunhoferSpec(lambda_db=1e-3, d=1.0, a=0.3, big_l=300.0, amplitude=2.5)
    first_null = spec.lambda_db * spec.big_l / (2 * spec.d)
    assert fraunhofer_reference(spec, [0.0])[0] == 2.5
    assert fraunhofer_reference(spec, [first_null])[0] == pytest.approx(0.0, abs=1e-25)


def test_fraunhofer_reference_closed_form():
    ys = np.linspace(-2, 2, 41)
    k = math.pi / (REF.lambda_db * REF.big_l)
    expected = [
        math.cos(k * REF.d * y) ** 2 * (1.0 if y == 0 else (math.sin(k * REF.a * y) / (k * REF.a * y)) ** 2)
        for y in ys
    ]
    assert fraunhofer_reference(REF, ys) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_fringe_spacing_defaults():
    assert REF.lambda_db == pytest.approx(2 * math.pi / 5000, rel=1e-15)
    assert REF.fringe_spacing == pytest.approx(0.3477, abs=1e-4)
    fast = FraunhoferSpec.from_physics(P, -10000.0, -350.0)
    assert fast.fringe_spacing == pytest.approx(0.5 * REF.fringe_spacing, rel=1e-15)


def test_envelope_switch():
    plain = FraunhoferSpec(REF.lambda_db, REF.d, REF.a, REF.big_l, envelope=False)
    ys = np.linspace(-1, 1, 11)
    assert np.all(fraunhofer_reference(plain, ys) >= fraunhofer_reference(REF, ys))


def test_belt_initial_and_free():
    st0 = PhaseState(0.0, 400.0, 0.5, -5000.0, 0.0, 0.2, 0.0, 0.2, 0.0)
    b = belt(integrate(st0, P))
    assert (b.y_lo[0], b.y_hi[0]) == pytest.approx((0.3, 0.7), abs=1e-15)
    free = integrate(st0, P, kind=FREE)
    bf = belt(free)
    assert 0.5 * (bf.x_hi[-1] - bf.x_lo[-1]) == pytest.approx(0.425, abs=1e-8)


@pytest.fixture(scope="module")
def free_ensemble():
    return run_ensemble(EnsembleConfig(n=9), P, kind=FREE, retain=True)


def test_snapshot_initial(free_ensemble):
    s = snapshot(free_ensemble, 0.0)
    assert np.all(s.xy[:, 0] == 400.0)
    assert np.array_equal(s.xy[:, 1], np.linspace(-4, 4, 9))


def test_snapshot_free_kinematics(free_ensemble):
    for t in (0.01, 0.0731, 0.149):
        s = snapshot(free_ensemble, t)
        assert np.max(np.abs(s.xy[:, 0] - (400.0 - 5000.0 * t))) < 1e-9


def test_snapshot_errors(free_ensemble):
    with pytest.raises(RangeError):
        snapshot(free_ensemble, 0.2)
    bare = run_ensemble(EnsembleConfig(n=2), P, kind=FREE)
    with pytest.raises(ConfigurationError):
        snapshot(bare, 0.0)


def test_snapshot_clusters_after_barrier():
    res = run_ensemble(EnsembleConfig(n=41, y_range=(-1.0, 1.0)), P, retain=True)
    arrived = [i for i, o in enumerate(res.outcomes) if o.name == "arrival"]
    res.trajectories = [res.trajectories[i] for i in arrived]
    t_late = min(tr.t[-1] for tr in res.trajectories)

    def spacing_variance(s):
        return np.var(np.diff(np.sort(s.xy[:, 1])))

    assert spacing_variance(snapshot(res, t_late)) > spacing_variance(snapshot(res, 0.0))


def test_arrival_times_free(free_ensemble):
    at = arrival_times(free_ensemble)
    assert np.max(np.abs(at.t_hit - 0.15)) < 1e-9
    assert at.counts.sum() == 9


def test_arrival_times_single_and_empty():
    res = run_ensemble(EnsembleConfig(n=1), P)
    at = arrival_times(res)
    assert at.t_min == at.t_max == at.t_median and at.counts.sum() == 1
    blocked = run_ensemble(EnsembleConfig(n=1, y_range=(2.9, 3.1)), P)
    assert blocked.outcomes[0].name == "reflected"
    with pytest.raises(EmptyInputError):
        arrival_times(blocked)


def test_fringe_score_examples():
    ys = np.linspace(-1, 1, 201)
    ref = fraunhofer_reference(REF, ys)
    assert fringe_score(ref, ref) == pytest.approx(1.0, abs=1e-12)
    assert fringe_score(ref.max() + 0.1 - ref, ref) <= 0.0
    with pytest.raises(UndefinedCorrelationError):
        fringe_score(np.ones(5), np.arange(5.0))


def test_interference_report_on_ideal_pattern():
    # arrivals drawn from the reference itself must recover its fringes
    rng = np.random.default_rng(0)
    ys = rng.uniform(-6, 6, 400_000)
    keep = rng.uniform(0, 1, ys.size) < fraunhofer_reference(REF, ys)
    hist = histogram(ys[keep], HistogramSpec(bin_width=0.02))
    rep = interference_report(hist, REF, bandwidth_bins=1.0)
    assert abs(rep.global_max_y) <= 0.2
    # one mirrored pair is two secondary maxima
    assert 2 * len(rep.symmetric_pairs) >= 2
    assert rep.measured_spacing == pytest.approx(REF.fringe_spacing, rel=0.1)
    assert rep.score > 0.9


def test_find_maxima_edges():
    assert list(find_maxima(np.array([3.0, 1.0, 0.0, 1.0, 2.0, 0.5]))) == [0, 4]
    assert find_maxima(np.zeros(4)).size == 0


def test_mirror_symmetry_pvalue():
    rng = np.random.default_rng(2)
    sym = rng.normal(0, 1, 5000)
    assert mirror_symmetry_pvalue(np.concatenate([sym, -sym])) == pytest.approx(1.0)
    assert mirror_symmetry_pvalue(np.abs(sym)) < 1e-6
