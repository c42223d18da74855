# tests/test_cli.py
import json

import pandas as pd
import pytest

from run_utils import read_manifest
from waveobs import EXIT_INVALID, EXIT_OK, EXIT_PIPELINE, main

SMALL_GRID = {"T": 1.0, "nt": 100, "nx": 50}


def _config(tmp_path, raw, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)


def _run(tmp_path, command, raw, *extra, out="out"):
    target = tmp_path / out
    code = main([command, "--config", _config(tmp_path, raw), "--out", str(target), "--log-level", "WARNING", *extra])
    return code, target


# ───────────────────────────── commands ─────────────────────────────
def test_simulate_writes_field_and_manifest(tmp_path):
    code, out = _run(tmp_path, "simulate", {"problem": {"catalog": "linear-unit"}, "grid": SMALL_GRID,
                                            "options": {"every": 10}})
    assert code == EXIT_OK
    field = pd.read_csv(out / "field.csv")
    assert list(field.columns) == ["t", "x", "u", "u_x", "u_t"]
    assert len(field) == 11 * 51
    compat = pd.read_csv(out / "compatibility.csv")
    assert compat["passed"].all()
    m = read_manifest(out / "manifest.json")
    assert m["command"] == "simulate" and m["status"] == "ok"
    assert m["artifacts"] == ["field.csv", "compatibility.csv"]
    assert m["grid"]["nx"] == 50
    assert m["diagnostics"]["compatibility_passed"] is True


def test_observe_writes_tables(tmp_path):
    code, out = _run(tmp_path, "observe", {"problem": {"catalog": "linear-unit"}, "grid": SMALL_GRID})
    assert code == EXIT_OK
    assert list(pd.read_csv(out / "observations.csv").columns) == ["t", "k_left", "k_right"]
    assert len(pd.read_csv(out / "norms.csv")) == 2
    assert (out / "traces.csv").is_file()


def test_obstime_with_classification(tmp_path):
    raw = {"problem": {"catalog": "nonauto-sin"}, "options": {"t0_grid": [0.0, 3.0], "horizon": 4.0}}
    code, out = _run(tmp_path, "obstime", raw, "--classify")
    assert code == EXIT_OK
    table = pd.read_csv(out / "obstime.csv")
    assert list(table["status"]) == ["pass", "pass"]
    assert table["T_star"].iloc[0] == pytest.approx(0.4502, abs=1e-3)
    assert "strengthened_passed" in table.columns
    assert read_manifest(out / "manifest.json")["diagnostics"]["classification"] == "all"
    assert len(pd.read_csv(out / "classification.csv")) == 2


def test_obstime_never_is_blank(tmp_path):
    code, out = _run(tmp_path, "obstime", {"problem": {"catalog": "nonauto-decay"}}, "--mode", "one_sided_left")
    assert code == EXIT_OK
    table = pd.read_csv(out / "obstime.csv")
    assert table["status"].iloc[0] == "fail"
    assert pd.isna(table["T_star"].iloc[0])
    assert read_manifest(out / "manifest.json")["mode"] == "one_sided"


def test_convergence_against_exact_solution(tmp_path):
    raw = {"problem": {"catalog": "linear-unit"}, "grid": SMALL_GRID,
           "options": {"exact": "0.05*sin(pi*x)*cos(pi*t)", "levels": 2}}
    code, out = _run(tmp_path, "convergence", raw)
    assert code == EXIT_OK
    table = pd.read_csv(out / "convergence.csv")
    assert list(table["nx"]) == [50, 100]
    assert table["error"].iloc[1] < table["error"].iloc[0]


def test_spherical_delegates(tmp_path):
    raw = {"problem": {"c": "1", "f": "0", "phi": "0.01*(r - 1)^3*(2 - r)^3"},
           "spherical": {"n": 3, "r1": 1.0, "r2": 2.0}, "grid": SMALL_GRID}
    code, out = _run(tmp_path, "spherical", raw, "--delegate", "simulate")
    assert code == EXIT_OK
    m = read_manifest(out / "manifest.json")
    assert m["command"] == "spherical"
    assert m["diagnostics"]["delegate"] == "simulate"
    assert "reduced_problem" in m["diagnostics"]
    assert (out / "field.csv").is_file()


# ───────────────────────────── exit codes ─────────────────────────────
def test_invalid_configurations_exit_2(tmp_path, capsys):
    code, _ = _run(tmp_path, "simulate", {"problem": {"catalog": "linear-unit", "speed": "1"}})
    assert code == EXIT_INVALID
    assert "problem:" in capsys.readouterr().err
    code, _ = _run(tmp_path, "simulate", {"problem": {"c": "1 +", "f": "0"}})
    assert code == EXIT_INVALID
    code, _ = _run(tmp_path, "spherical", {"problem": {"catalog": "linear-unit"}})
    assert code == EXIT_INVALID
    assert main(["simulate"]) == EXIT_INVALID
    assert main(["replay"]) == EXIT_INVALID
    assert main(["simulate", "--config", str(tmp_path / "absent.json")]) == EXIT_INVALID


def test_unknown_mode_is_an_argument_error(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["reconstruct", "--config", _config(tmp_path, {"problem": {"catalog": "linear-unit"}}),
              "--mode", "sideways"])
    assert err.value.code == 2


def test_short_window_exits_3(tmp_path, capsys):
    raw = {"problem": {"catalog": "linear-unit"}, "grid": {"T": 0.9, "nt": 180}}
    code, out = _run(tmp_path, "reconstruct", raw, "--mode", "two_sided")
    assert code == EXIT_PIPELINE
    assert "do not intersect" in capsys.readouterr().err
    assert not (out / "manifest.json").exists()


# ───────────────────────────── determinism ─────────────────────────────
def test_replay_is_byte_identical(tmp_path):
    code, first = _run(tmp_path, "simulate", {"problem": {"catalog": "linear-unit"}, "grid": SMALL_GRID})
    assert code == EXIT_OK
    second = tmp_path / "again"
    assert main(["replay", "--manifest", str(first / "manifest.json"), "--out", str(second),
                 "--log-level", "WARNING"]) == EXIT_OK
    for name in ("field.csv", "compatibility.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert read_manifest(second / "manifest.json")["config"]["out"] == str(second)


def test_ratio_seed_is_reproducible(tmp_path):
    raw = {"problem": {"catalog": "linear-unit"}, "grid": {"T": 1.2, "nt": 100, "nx": 50},
           "options": {"trials": 2}}
    _, a = _run(tmp_path, "ratio", raw, "--seed", "5", out="a")
    _, b = _run(tmp_path, "ratio", raw, "--seed", "5", out="b")
    assert (a / "ratios.csv").read_bytes() == (b / "ratios.csv").read_bytes()
    assert read_manifest(a / "manifest.json")["seed"] == 5
    _, c = _run(tmp_path, "ratio", raw, "--seed", "6", out="c")
    assert (a / "ratios.csv").read_bytes() != (c / "ratios.csv").read_bytes()


@pytest.mark.slow
def test_reconstruct_from_observation_file(tmp_path):
    raw = {"problem": {"catalog": "linear-unit"}, "grid": {"T": 1.2, "nt": 240}}
    code, observed = _run(tmp_path, "observe", raw, out="observed")
    assert code == EXIT_OK
    code, out = _run(tmp_path, "reconstruct", raw, "--mode", "two_sided",
                     "--observations", str(observed / "observations.csv"), out="recovered")
    assert code == EXIT_OK
    m = read_manifest(out / "manifest.json")
    assert m["artifacts"] == ["result.csv", "curves.csv"]
    assert m["diagnostics"]["error_phi"] < 2e-2
    assert m["diagnostics"]["argv"]["observations"].endswith("observations.csv")
    result = pd.read_csv(out / "result.csv")
    assert list(result.columns)[:3] == ["x", "phi_hat", "psi_hat"]


def test_decay_classification_flips_at_zero(tmp_path):
    raw = {"problem": {"catalog": "nonauto-decay"},
           "options": {"t0_grid": {"start": -2, "stop": 2, "num": 5}, "horizon": 10.0}}
    code, out = _run(tmp_path, "obstime", raw, "--classify")
    assert code == EXIT_OK
    table = pd.read_csv(out / "classification.csv")
    assert list(table["t0"]) == [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert list(table["status"]) == ["observable", "observable", "never", "never", "never"]
    assert read_manifest(out / "manifest.json")["diagnostics"]["classification"] == "some"


def test_replay_keeps_command_line_seed(tmp_path):
    raw = {"problem": {"catalog": "linear-unit"}, "grid": {"T": 1.2, "nt": 100, "nx": 50},
           "options": {"trials": 2}}
    code, first = _run(tmp_path, "ratio", raw, "--seed", "9")
    assert code == EXIT_OK
    again = tmp_path / "again"
    assert main(["replay", "--manifest", str(first / "manifest.json"), "--out", str(again),
                 "--log-level", "WARNING"]) == EXIT_OK
    assert (first / "ratios.csv").read_bytes() == (again / "ratios.csv").read_bytes()
    assert read_manifest(again / "manifest.json")["seed"] == 9


@pytest.mark.slow
def test_replay_finds_observations_from_another_directory(tmp_path, monkeypatch):
    raw = {"problem": {"catalog": "linear-unit"}, "grid": {"T": 1.2, "nt": 240}}
    config = _config(tmp_path, raw)
    monkeypatch.chdir(tmp_path)
    assert main(["observe", "--config", config, "--out", "observed", "--log-level", "WARNING"]) == EXIT_OK
    assert main(["reconstruct", "--config", config, "--out", "recovered", "--mode", "two_sided",
                 "--observations", "observed/observations.csv", "--log-level", "WARNING"]) == EXIT_OK
    manifest = tmp_path / "recovered" / "manifest.json"
    assert read_manifest(manifest)["diagnostics"]["argv"]["observations"] == "../observed/observations.csv"

    elsewhere = tmp_path / "elsewhere"
    elsewhere.mkdir()
    monkeypatch.chdir(elsewhere)
    again = tmp_path / "again"
    assert main(["replay", "--manifest", str(manifest), "--out", str(again), "--log-level", "WARNING"]) == EXIT_OK
    assert (tmp_path / "recovered" / "result.csv").read_bytes() == (again / "result.csv").read_bytes()
