import csv
import json

import pytest
from hypothesis import given, settings, strategies as st

from qenergy import cli

HO1 = '{"variant":"ho_eigen","n":1,"omega":1.0}'
HALF_MASS = '{"variant":"gaussian","a":0.7071067811865476,"b":0.3535533905932738}'


@pytest.fixture(autouse=True)
def fixed_epoch(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def _run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out", str(tmp_path)])


def _only(tmp_path, pattern):
    files = sorted(tmp_path.glob(pattern))
    assert len(files) == 1, files
    return files[0]


def test_verify_oscillator_exit_zero(tmp_path):
    assert _run(tmp_path, "verify", "--set", f"state={HO1}") == 0
    rep = json.loads(_only(tmp_path, "verify_ho_eigen_n1_omega1.0_*.json").read_text())
    assert rep["pass"] and all(r["pass"] for r in rep["reports"])
    assert {r["check"] for r in rep["reports"]} >= {"stationary", "tmh_equivalence", "rotor",
                                                    "symmetries", "limit_scaling"}


def test_strict_profile(tmp_path):
    assert _run(tmp_path, "verify", "--set", f"state={HO1}", "--tolerance-profile", "strict") in (0, 1)
    rep = json.loads(next(tmp_path.glob("verify_*.json")).read_text())
    stat = [r for r in rep["reports"] if r["check"] == "stationary"][0]
    assert stat["tolerances"]["gap"] == 1e-12


def test_transport_half_mass_packet(tmp_path):
    assert _run(tmp_path, "transport", "--set", f"state={HALF_MASS}", "--set", "constants.mass=0.5",
                "--set", "params.n_times=11") == 0
    rows = list(csv.DictReader(_only(tmp_path, "transport_*.csv").open()))
    assert len(rows) == 11
    assert all(abs(float(r["v_cor"]) - 1.0) < 1e-6 for r in rows)
    # the moments give 2.6 for these parameters (see README, known deviations)
    assert all(abs(float(r["v_en"]) - 2.6) < 1e-6 for r in rows)


def test_figures_airy(tmp_path):
    assert _run(tmp_path, "figures", "--set", 'state={"variant":"airy","beta":1.0}') == 0
    rows = list(csv.DictReader(_only(tmp_path, "figures_*.csv").open()))
    assert list(rows[0]) == ["xi", "rho"]
    rep = json.loads(_only(tmp_path, "figures_*.json").read_text())
    assert -2.34 < rep["residuals"]["peak_numeric"] < 0


def test_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(d, "density", "--set", f"state={HALF_MASS}") == 0
    for fa in a.iterdir():
        assert fa.read_bytes() == (b / fa.name).read_bytes()


def test_explore_small(tmp_path):
    assert _run(tmp_path, "explore", "--set", "params.budget=150",
                "--set", "params.resolution=[201, 21]") == 0
    rep = json.loads(_only(tmp_path, "explore_*[0-9]Z.json").read_text())
    assert rep["residuals"]["negative"] is True
    assert _only(tmp_path, "explore_*_ledger.jsonl").read_text().count("\n") >= 2


def test_limit_and_evolve(tmp_path):
    assert _run(tmp_path, "limit", "--set", 'state={"variant":"gaussian","a":1.0,"b":1.0}',
                "--set", 'potential={"variant":"harmonic","omega":0.5}',
                "--set", 'grid={"n_points":128,"x_min":-13,"x_max":13}') == 0
    assert _run(tmp_path, "evolve", "--set", 'state={"variant":"gaussian","a":1.0,"b":0.5}',
                "--set", "evolution.n_steps=20", "--set", "evolution.dt=0.001") == 0
    assert (next(tmp_path.glob("evolve_*_trajectory")) / "index.json").exists()


@pytest.mark.parametrize("argv", [
    ["verify", "--set", 'state={"variant":"bogus"}'],
    ["verify", "--set", "colour=3"],
    ["verify", "--set", f"state={HO1}", "--set", "params.n_steps=3"],
    ["verify", "--set", "nodot"],
    ["transport", "--set", f"state={HO1}"],
])
def test_config_errors_exit_two(tmp_path, argv):
    assert _run(tmp_path, *argv) == 2


def test_config_file_and_command_mismatch(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"command": "density", "state": json.loads(HO1)}))
    assert cli.main(["verify", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert cli.main(["density", "--config", str(p), "--out", str(tmp_path)]) == 0


def test_check_failure_exit_one(tmp_path):
    # a grid too coarse for the oscillator breaks the stationary check
    assert _run(tmp_path, "verify", "--set", f"state={HO1}",
                "--set", 'grid={"n_points":16,"x_min":-3,"x_max":3}') == 1


def test_set_overrides_parse_json():
    d = cli.apply_overrides({"a": {"b": 1}}, ["a.c=[1, 2]", "a.b=2.5", "d=text"])
    assert d == {"a": {"b": 2.5, "c": [1, 2]}, "d": "text"}


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 3), st.floats(-3, 3), st.integers(16, 512), st.floats(1e-4, 1e-2),
       st.integers(1, 50), st.sampled_from(["default", "strict"]), st.integers(0, 2 ** 31))
def test_run_config_round_trip(a, b, n, dt, steps, profile, seed):
    d = {"command": "evolve", "state": {"variant": "gaussian", "a": a, "b": b},
         "grid": {"n_points": n, "x_min": -10.0, "x_max": 10.0},
         "potential": {"variant": "harmonic", "omega": 0.5},
         "evolution": {"dt": dt, "n_steps": steps}, "tolerance_profile": profile, "seed": seed,
         "params": {"export_every": 2}}
    cfg = cli.RunConfig.from_dict(d)
    emitted = json.loads(json.dumps(cfg.to_dict()))
    again = cli.RunConfig.from_dict(emitted)
    assert again.to_dict() == cfg.to_dict()
    assert json.loads(json.dumps(again.to_dict())) == emitted


def test_round_trip_superposition():
    d = {"command": "density", "state": {"superposition": {
        "coefficients": [[1.0, 0.0], [0.0, 0.5]], "centers": [-1.0, 1.0],
        "momenta": [0.0, 0.3], "widths": [1.0, 0.8], "normalized": False}}}
    cfg = cli.RunConfig.from_dict(d)
    assert cli.RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_default_grids_cover_variants():
    from qenergy.catalog import PacketSpec, realize
    from qenergy.grid import PhysConstants
    c = PhysConstants()
    for spec in [PacketSpec("gaussian", a=1.0, b=1.0), PacketSpec("ho_eigen", n=3, omega=2.0),
                 PacketSpec("landau", n=1, k_x=0.5, k_z=1.0, s=0.5, B=2.0),
                 PacketSpec("scattering", k=2.0, f=0.5), PacketSpec("plane_wave", k=(1.0, 2.0)),
                 PacketSpec("airy", beta=1.0)]:
        realize(spec, cli.default_grid(spec, c), 0.0, c)


def test_shipped_configs_parse():
    from pathlib import Path
    files = sorted((Path(__file__).parents[1] / "configs").glob("*.json"))
    assert files
    for p in files:
        cfg = cli.RunConfig.from_dict(json.loads(p.read_text()))
        assert cfg.command in cli.COMMANDS
