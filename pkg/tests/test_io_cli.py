import json
import math

import numpy as np
import pytest

from slitmoments.cli import main
from slitmoments.config import ConfigError, load_config
from slitmoments.io import (
    OUTCOME_COLUMNS,
    TRAJECTORY_COLUMNS,
    column,
    read_csv,
    write_trajectory_csv,
)
from slitmoments.integrate import integrate
from slitmoments.model import PhaseState, PhysParams


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_trajectory_csv_round_trip(tmp_path):
    traj = integrate(PhaseState(0.0, 400.0, 0.3, -5000.0, 0.0, 0.2, 0.0, 0.2, 0.0), PhysParams())
    path = write_trajectory_csv(tmp_path / "t.csv", traj)
    table = read_csv(path)
    assert tuple(table) == TRAJECTORY_COLUMNS
    assert np.array_equal(column(table, "t"), traj.t)
    assert np.array_equal(column(table, "psy"), traj.z[:, 7])
    assert np.array_equal(column(table, "H_Q"), traj.hamiltonian())


def test_defaults_load():
    cfg = load_config()
    assert cfg.physics == PhysParams()
    assert cfg.ensemble.n == 2000 and cfg.ensemble.sampler == "grid"
    assert cfg.integrator.x_screen == -350.0


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[ensemble]\nn = 12\n[physics]\nalpha = 2.0\n")
    cfg = load_config(path, {"ensemble.sampler": "uniform", "seed": "5"})
    assert cfg.ensemble.n == 12 and cfg.physics.alpha == 2.0
    assert cfg.ensemble.sampler == "uniform" and cfg.ensemble.seed == 5


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"physics.u": "0.1"}, "physics.u"),
        ({"physics.alpha": "0"}, "physics.alpha"),
        ({"physics.nope": "1"}, "physics.nope"),
        ({"ensemble.n": "many"}, "ensemble.n"),
    ],
)
def test_config_errors(overrides, field):
    with pytest.raises(ConfigError) as info:
        load_config(None, overrides)
    assert info.value.field == field


def test_geometry(capsys):
    code, g = run_json(capsys, "geometry")
    assert code == 0
    assert g["y_slit"] == pytest.approx(0.6325, abs=1e-4)
    assert g["fringe_spacing"] == pytest.approx(0.3477, abs=1e-4)
    _, g2 = run_json(capsys, "geometry", "--set", "physics.omega=2e4")
    assert g2["y_slit"] == pytest.approx(0.5 * g["y_slit"], rel=1e-14)
    _, g3 = run_json(capsys, "geometry", "--set", "ensemble.px0=-10000")
    assert g3["lambda_dB"] == pytest.approx(0.5 * g["lambda_dB"], rel=1e-14)
    assert g3["fringe_spacing"] == pytest.approx(0.5 * g["fringe_spacing"], rel=1e-14)


def test_bad_config_exit_code(capsys):
    code, err = run_json(capsys, "simulate", "--set", "physics.u=0.1")
    assert code == 2
    assert err["field"].split(".")[-1] == "u"


def test_simulate_on_axis(capsys, tmp_path):
    code, s = run_json(capsys, "simulate", "--y0", "0", "--out", str(tmp_path), "--svg")
    assert code == 0
    assert s["outcome"] == "arrival" and abs(s["y_hit"]) < 1e-6
    assert (tmp_path / "trajectory.csv").exists()
    assert (tmp_path / "trajectory.svg").read_text().startswith("<?xml")


def test_simulate_free_straight_line(capsys, tmp_path):
    code, _ = run_json(capsys, "simulate", "--y0", "4", "--potential", "free", "--out", str(tmp_path))
    assert code == 0
    table = read_csv(tmp_path / "trajectory.csv")
    t, x, y = (column(table, k) for k in ("t", "x", "y"))
    assert np.all(y == 4.0)
    assert np.max(np.abs(x - (400.0 - 5000.0 * t))) < 1e-9


def test_simulate_failure_reports_state(capsys, tmp_path):
    code, s = run_json(capsys, "simulate", "--set", "integrator.h_max=1e-20", "--out", str(tmp_path))
    assert code == 1
    assert s["error"] == "integration"


def test_ensemble_small_grid(capsys, tmp_path):
    code, s = run_json(capsys, "ensemble", "--n", "10", "--out", str(tmp_path))
    assert code == 0
    table = read_csv(tmp_path / "outcomes.csv")
    assert tuple(table) == OUTCOME_COLUMNS
    assert len(table["index"]) == 10
    assert sum(s["counts"].values()) == 10
    for name in ("histogram.csv", "arrival_times.csv"):
        assert (tmp_path / name).exists()


def test_ensemble_outputs_with_trajectories(capsys, tmp_path):
    code, s = run_json(
        capsys, "ensemble", "--n", "9", "--retain-trajectories", "--svg",
        "--snapshot-t", "0.05", "--envelope", "off", "--out", str(tmp_path),
    )
    assert code == 0
    snap = read_csv(tmp_path / "snapshot.csv")
    assert len(snap["index"]) == 9
    assert np.allclose(column(snap, "x"), 400.0 - 5000.0 * 0.05, atol=1e-6)
    for name in ("histogram.svg", "trajectories.svg", "snapshot.svg", "arrival_times.svg"):
        assert (tmp_path / name).exists()


def test_seeded_runs_are_byte_identical(capsys, tmp_path):
    for d in ("a", "b"):
        code, _ = run_json(
            capsys, "ensemble", "--n", "30", "--sampler", "uniform", "--seed", "11",
            "--workers", "2", "--out", str(tmp_path / d),
        )
        assert code == 0
    for name in ("outcomes.csv", "histogram.csv", "arrival_times.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_outcome_csv_blank_cells(capsys, tmp_path):
    run_json(capsys, "ensemble", "--n", "5", "--out", str(tmp_path))
    table = read_csv(tmp_path / "outcomes.csv")
    y_hit = column(table, "y_hit")
    for name, v in zip(table["outcome"], y_hit):
        assert (name == "arrival") == (not math.isnan(v))


def test_validate_passes(capsys):
    code, out = run(capsys, "validate")
    assert code == 0
    assert "FAIL" not in out


def test_validate_loose_tolerance_fails(capsys):
    code, out = run(capsys, "validate", "--set", "integrator.rtol=1e-3", "--set", "integrator.atol=1e-6")
    assert code == 1
    drift = [line for line in out.splitlines() if "energy drift" in line]
    assert drift and drift[0].startswith("FAIL")
