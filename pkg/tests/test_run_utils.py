# tests/test_run_utils.py
import json
import os

import numpy as np
import pandas as pd
import pytest

from errors import ConfigError
from run_utils import (
    RunConfig,
    build_problem,
    list_runs,
    load_config,
    normalize_mode,
    parse_config,
    read_manifest,
    run_grid,
    settings_from,
    setup_logging,
    t0_grid,
    valid_run,
    versions,
    write_csv,
    write_manifest,
)

LINEAR = {"problem": {"catalog": "linear-unit"}}


# ───────────────────────────── config ─────────────────────────────
def test_parse_config_defaults():
    cfg = parse_config(LINEAR)
    assert cfg.mode == "two_sided"
    assert cfg.seed == 0 and cfg.out == "runs"
    assert cfg.spherical is None
    assert cfg.echo()["problem"] == {"catalog": "linear-unit"}


@pytest.mark.parametrize("raw", [
    [],
    {"grid": {}},
    {"problem": "linear-unit"},
    {**LINEAR, "extra": 1},
    {**LINEAR, "grid": {"nx": 4}},
    {**LINEAR, "grid": {"nx": True}},
    {**LINEAR, "grid": {"nt": 100.5}},
    {**LINEAR, "grid": {"T": -1}},
    {**LINEAR, "grid": {"dt": 0.1}},
    {**LINEAR, "spherical": {"n": 3, "r1": 1}},
    {**LINEAR, "options": {"colour": "red"}},
    {**LINEAR, "options": {"mode": "both"}},
    {**LINEAR, "options": {"epsilon": 0}},
    {**LINEAR, "options": {"cfl_safety": 1.5}},
    {**LINEAR, "seed": -1},
    {**LINEAR, "seed": "7"},
    {**LINEAR, "out": ""},
])
def test_parse_config_rejects(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_settings_from_options():
    s = settings_from({"epsilon": 0.2, "trials": 5})
    assert s.epsilon == 0.2
    assert s.cfl_safety == settings_from({}).cfl_safety


def test_normalize_mode():
    assert normalize_mode("one_sided_left") == "one_sided"
    assert normalize_mode("one_sided_right") == "one_sided_right"
    with pytest.raises(ConfigError):
        normalize_mode("left")


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{problem: 1", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({**LINEAR, "seed": 11}), encoding="utf-8")
    assert load_config(good).seed == 11


def test_setup_logging_rejects_unknown_level():
    with pytest.raises(ConfigError):
        setup_logging("LOUD")


# ───────────────────────────── problems and grids ─────────────────────────────
def test_run_grid_uses_cfl_count():
    cfg = parse_config({**LINEAR, "grid": {"T": 1.2, "nt": 400}})
    g = run_grid(cfg, build_problem(cfg))
    assert (g.nx, g.nt) == (266, 400)
    assert g.t1 == pytest.approx(1.2)


def test_run_grid_defaults_to_horizon():
    cfg = parse_config({"problem": {"catalog": "linear-unit", "horizon": 2.0}, "grid": {"nx": 100}})
    g = run_grid(cfg, build_problem(cfg))
    assert (g.t1, g.nx, g.nt) == (2.0, 100, 400)


def test_build_spherical_problem():
    cfg = parse_config({"problem": {"c": "1", "f": "0", "phi": "0"}, "spherical": {"n": 3, "r1": 1.0, "r2": 2.0}})
    p = build_problem(cfg)
    assert p.meta["spherical"]["n"] == 3
    missing = RunConfig({"catalog": "linear-unit"}, spherical={"n": 3, "r1": 1.0, "r2": 2.0})
    with pytest.raises(ConfigError):
        build_problem(missing)


def test_t0_grid_forms():
    assert t0_grid({}) == [0.0]
    assert t0_grid({"t0_grid": [0, 1.5]}) == [0.0, 1.5]
    assert t0_grid({"t0_grid": {"start": 0, "stop": 1, "num": 5}}) == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ConfigError):
        t0_grid({"t0_grid": []})
    with pytest.raises(ConfigError):
        t0_grid({"t0_grid": {"start": 0, "end": 1}})


# ───────────────────────────── artifacts ─────────────────────────────
def test_write_csv_format(tmp_path):
    path = write_csv(pd.DataFrame({"x": [0.1, 2.0], "k": [1, 2]}), tmp_path / "sub" / "a.csv")
    text = path.read_bytes().decode("utf-8")
    assert text == "x,k\n0.10000000000000001,1\n2,2\n"


def test_manifest_round_trip(tmp_path):
    cfg = parse_config({**LINEAR, "seed": 3})
    path = write_manifest(
        tmp_path, "simulate", cfg, wall_time=0.5, artifacts=["field.csv"], mode="two_sided",
        extra={"c1_bound": np.float64(0.25), "curve": np.array([1.0, 2.0])},
    )
    m = read_manifest(path)
    assert m["command"] == "simulate" and m["seed"] == 3
    assert m["diagnostics"] == {"c1_bound": 0.25, "curve": [1.0, 2.0]}
    assert m["grid"] is None
    assert set(m["versions"]) == set(versions())
    with pytest.raises(ConfigError):
        read_manifest(tmp_path / "nope.json")


def test_list_runs_newest_first(tmp_path):
    cfg = parse_config(LINEAR)
    old = write_manifest(tmp_path / "old", "simulate", cfg, wall_time=0.0, artifacts=[])
    new = write_manifest(tmp_path / "new", "observe", cfg, wall_time=0.0, artifacts=[])
    os.utime(old, (1_000, 1_000))
    os.utime(new, (2_000, 2_000))
    (tmp_path / "empty").mkdir()
    assert [p.name for p in list_runs(tmp_path)] == ["new", "old"]
    assert list_runs(tmp_path / "absent") == []


@pytest.mark.parametrize("name, ok", [("run_1", True), ("a-b", True), ("1run", False), ("a/b", False), ("", False)])
def test_valid_run(name, ok):
    assert bool(valid_run(name)) is ok
