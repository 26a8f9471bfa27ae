import csv
import json

import numpy as np
import pytest

from kerrsync.cli import main, read_config
from kerrsync.errors import ConfigurationError, SweepError
from kerrsync.hilbert import ModelParams
from kerrsync.sweep import (
    RECIPES,
    Axis,
    SweepSpec,
    emit,
    recipe,
    run_sweep,
)

BASE = ModelParams(gamma1=1.0, gamma2=1.0, kerr=2.0, drive=0.5)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -------------------------------------------------------------------- specs

def test_axis_validation():
    assert Axis.from_range("detuning", 0, 1, 0.25).values == (0, 0.25, 0.5, 0.75, 1.0)
    assert Axis("drive", (3, 2, 1)).values == (3.0, 2.0, 1.0)
    for bad in [("nope", (1,)), ("drive", ()), ("drive", (1, 1, 2)), ("drive", (1, 3, 2))]:
        with pytest.raises(ConfigurationError):
            Axis(*bad)


def test_spec_validation():
    ax = Axis("detuning", (0.0, 1.0))
    with pytest.raises(ConfigurationError):
        SweepSpec(BASE, ax, observables=("bogus",))
    with pytest.raises(ConfigurationError):
        SweepSpec(BASE, ax, solver="fokker_planck", observables=("sync",))
    with pytest.raises(ConfigurationError):
        SweepSpec(BASE, ax, solver="lab_propagator")
    with pytest.raises(ConfigurationError):
        SweepSpec(BASE, ax, axis2=Axis("detuning", (2.0,)))
    with pytest.raises(ConfigurationError):
        SweepSpec(BASE, ax, options={"wigner_colour": 1})
    with pytest.raises(ConfigurationError):
        SweepSpec(BASE, ax, observables=("entrainment",), options={"omega_step": 0.5})


def test_points_are_row_major():
    spec = SweepSpec(BASE, Axis("detuning", (0.0, 1.0, 2.0)), Axis("drive", (0.1, 0.2)))
    pts = spec.points()
    assert spec.shape == (3, 2)
    assert pts[:3] == [{"detuning": 0.0, "drive": 0.1}, {"detuning": 0.0, "drive": 0.2},
                       {"detuning": 1.0, "drive": 0.1}]


def test_recipes_build():
    for name in RECIPES:
        specs = recipe(name)
        assert specs and all(isinstance(s, SweepSpec) for s in specs)
    with pytest.raises(ConfigurationError):
        recipe("fig9")
    fig2 = recipe("fig2")[0]
    assert fig2.axis1.values[0] == 0 and fig2.axis1.values[-1] == 250
    assert fig2.axis1.values[1] - fig2.axis1.values[0] == pytest.approx(1.0)


# ------------------------------------------------------------------- running

def test_sweep_values_match_direct_calls():
    from kerrsync.observables import sync_measure
    from kerrsync.steadystate import steady_state

    spec = SweepSpec(BASE, Axis("detuning", (0.0, 3.0)))
    res = run_sweep(spec)
    direct = [sync_measure(steady_state(BASE.replace(detuning=d))).magnitude for d in (0.0, 3.0)]
    np.testing.assert_allclose(res.column("sync_abs"), direct, rtol=1e-12)


def test_failure_isolation():
    spec = SweepSpec(BASE, Axis("gamma2", (0.0, 1.0)), observables=("classical_sync",),
                     solver="fokker_planck")
    res = run_sweep(spec)
    assert [r.ok for r in res.rows] == [False, True]
    assert res.rows[0].error == "UnboundedAmplitudeError"
    assert res.metadata["failed_points"] == 1
    col = res.column("classical_abs")
    assert np.isnan(col[0]) and col[1] > 0


def test_all_failed_raises():
    spec = SweepSpec(BASE, Axis("gamma2", (0.0,)), observables=("classical_sync",),
                     solver="fokker_planck")
    with pytest.raises(SweepError, match="UnboundedAmplitudeError"):
        run_sweep(spec)


def test_emit_files_and_format(tmp_path):
    spec = SweepSpec(BASE, Axis("detuning", (0.0, 1.0)),
                     observables=("sync", "fock", "phase_dist", "spectrum", "wigner"),
                     options={"omega_min": -2.0, "omega_max": 2.0, "omega_step": 0.5,
                              "wigner_points": 11, "n_phi": 64})
    paths = emit(run_sweep(spec), tmp_path)
    names = {p.name for p in paths}
    assert {"data.csv", "fock.csv", "phase_dist.csv", "spectrum.csv", "metadata.json",
            "wigner_0000.csv", "wigner_0001_axes.csv"} <= names
    rows = read_rows(tmp_path / "data.csv")
    assert [r["status"] for r in rows] == ["ok", "ok"]
    value = rows[0]["sync_abs"]
    assert float(value) == float(format(float(value), ".17g"))
    assert len(value.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) >= 15
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert "omega_rel" in meta["conventions"]["frequency_axis"]
    assert meta["config"]["axis1"]["values"] == [0.0, 1.0]
    assert meta["points"] == 2


def test_png_output(tmp_path):
    spec = SweepSpec(BASE, Axis("detuning", (0.0, 1.0)), observables=("sync", "wigner"),
                     options={"wigner_points": 11})
    paths = emit(run_sweep(spec), tmp_path, png=True)
    assert any(p.suffix == ".png" for p in paths)


def test_determinism_and_workers(tmp_path):
    spec = SweepSpec(BASE, Axis("detuning", (0.0, 1.0, 2.0)), Axis("drive", (0.2, 0.4)),
                     observables=("sync", "classical_sync"))
    emit(run_sweep(spec), tmp_path / "a")
    emit(run_sweep(spec), tmp_path / "b")
    emit(run_sweep(spec, workers=2), tmp_path / "c")
    ref = (tmp_path / "a" / "data.csv").read_bytes()
    assert (tmp_path / "b" / "data.csv").read_bytes() == ref
    assert (tmp_path / "c" / "data.csv").read_bytes() == ref


# ----------------------------------------------------------------------- cli

def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_steady(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "steady", "--kerr", 2, "--drive", 0.5, "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["status"] == "ok"
    row = read_rows(tmp_path / "data.csv")[0]
    assert 0 < float(row["sync_abs"]) < 1
    probs = [float(r["probability"]) for r in read_rows(tmp_path / "fock.csv")]
    assert sum(probs) == pytest.approx(1.0, abs=1e-10)
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["params"]["kerr"] == 2.0


def test_cli_wigner_spectrum_classical(tmp_path, capsys):
    assert run_cli(capsys, "wigner", "--drive", 0.5, "--points", 21, "--out", tmp_path / "w")[0] == 0
    assert (tmp_path / "w" / "wigner.csv").exists()
    code, _, _ = run_cli(capsys, "spectrum", "--kerr", 1, "--detuning", 2, "--omega-min", -5,
                         "--omega-max", 5, "--omega-step", 0.5, "--out", tmp_path / "s")
    assert code == 0
    rows = read_rows(tmp_path / "s" / "spectrum.csv")
    assert len(rows) == 21
    assert float(rows[0]["omega_rel"]) - float(rows[0]["omega_rot"]) == pytest.approx(2.0)
    code, _, _ = run_cli(capsys, "classical", "--gamma2", 0.5, "--drive", 0.5, "--out",
                         tmp_path / "c")
    assert code == 0
    assert float(read_rows(tmp_path / "c" / "data.csv")[0]["residual"]) <= 1e-8


def test_cli_sweep_and_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kerr = 2\ndrive = 0.1  # overridden\ngamma2 = 1\n"
                   "axis = detuning:0:2:1\nobservables = sync\n")
    assert read_config(cfg)["kerr"] == "2"
    code, _, _ = run_cli(capsys, "sweep", "--config", cfg, "--drive", 0.5, "--out", tmp_path / "o")
    assert code == 0
    rows = read_rows(tmp_path / "o" / "data.csv")
    assert [float(r["detuning"]) for r in rows] == [0.0, 1.0, 2.0]
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert meta["config"]["base"]["drive"] == 0.5
    assert meta["config"]["base"]["kerr"] == 2.0


@pytest.mark.parametrize("argv, code, error", [
    (["steady", "--kerr", "abc"], 2, "UsageError"),
    (["bogus"], 2, "UsageError"),
    (["sweep", "--axis", "detuning:0:1"], 2, "UsageError"),
    (["sweep", "--axis", "bogus:0:1:1"], 2, "ConfigurationError"),
    (["steady", "--config", "/nonexistent.cfg"], 2, "FileNotFoundError"),
    (["classical", "--gamma2", "0"], 2, "UnboundedAmplitudeError"),
    (["sweep", "--gamma2", "0", "--axis", "drive:0:1:1", "--solver", "fokker_planck",
      "--observables", "classical_sync"], 1, "SweepError"),
])
def test_cli_errors(tmp_path, capsys, argv, code, error):
    got, out, err = run_cli(capsys, *argv, "--out", tmp_path) if argv[0] != "bogus" \
        else run_cli(capsys, *argv)
    assert got == code
    assert out == ""
    record = json.loads(err.strip().splitlines()[-1])
    assert record["status"] == "error" and record["error"] == error


def test_cli_recipe_rejects_unknown(capsys):
    code, _, err = run_cli(capsys, "recipe", "fig9")
    assert code == 2
    assert json.loads(err)["status"] == "error"


@pytest.mark.slow
def test_cli_recipe_fig4b(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "recipe", "fig4b", "--out", tmp_path)
    assert code == 0
    driven = read_rows(tmp_path / "fig4b_driven" / "data.csv")[0]
    assert float(driven["wigner_min"]) < 0
    assert (tmp_path / "fig4b_undriven" / "wigner_0000.csv").exists()
