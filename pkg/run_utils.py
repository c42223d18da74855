# run_utils.py
"""
Shared run utilities for the waveobs CLI and dashboard
──────────────────────────────────────────────────────
• setup_logging(level)            – root logger, once
• Settings / settings_from()      – library tunables (ε, tolerances, CFL safety)
• dashboard_settings()            – [dashboard] block of .streamlit/secrets.toml
• RunConfig / parse_config() / load_config()
• build_problem(cfg)              – catalog / explicit / spherical problem
• run_grid(cfg, p)                – Grid from the [grid] section
• write_csv() / write_manifest() / read_manifest() / list_runs()
• valid_run                       – regex
"""

from __future__ import annotations

import json
import logging
import platform
import re
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
import pandas as pd
import scipy

from errors import ConfigError
from hypersolve import CFL_SAFETY, Grid, cfl_nx
from problem import COMPAT_TOL, EPSILON, FD_STEP, Problem, make_problem, reduce_spherical

__version__ = "0.3.0"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_OUT = "runs"

# ───────────────────────────── logging ──────────────────────────────
_configured = False


def setup_logging(level: str = "INFO") -> None:
    global _configured
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        raise ConfigError(f"unknown log level {level!r}")
    if not _configured:
        logging.basicConfig(format=LOG_FORMAT, level=numeric)
        _configured = True
    logging.getLogger().setLevel(numeric)


# ───────────────────────────── settings ─────────────────────────────
@dataclass(frozen=True)
class Settings:
    epsilon: float = EPSILON
    compat_tol: float = COMPAT_TOL
    cfl_safety: float = CFL_SAFETY
    newton_tol: float = 1e-12
    fd_step: float = FD_STEP


def settings_from(options: Mapping[str, Any]) -> Settings:
    """Settings with any same-named `options` entries applied."""
    base = Settings()
    updates = {k: float(options[k]) for k in asdict(base) if k in options}
    for k, v in updates.items():
        if not v > 0:
            raise ConfigError(f"option {k} must be positive, got {v}")
    if updates.get("cfl_safety", 0.0) > 1.0:
        raise ConfigError("cfl_safety must not exceed 1")
    return replace(base, **updates)


def dashboard_settings() -> Dict[str, str]:
    """out_dir / default_catalog from st.secrets["dashboard"]; silent fallbacks."""
    import streamlit as st

    out = {"out_dir": DEFAULT_OUT, "default_catalog": "linear-unit"}
    try:
        if "dashboard" in st.secrets:
            block = st.secrets["dashboard"]
            for key in out:
                if key in block:
                    out[key] = str(block[key])
    except FileNotFoundError:
        pass    # no secrets.toml at all
    return out


# ──────────────────────────── run config ────────────────────────────
SECTIONS = frozenset({"problem", "grid", "spherical", "options", "seed", "out"})
GRID_KEYS = frozenset({"nx", "nt", "T"})
SPHERICAL_KEYS = frozenset({"n", "r1", "r2"})
OPTION_KEYS = frozenset({
    "mode", "trials", "levels", "epsilon", "compat_tol", "cfl_safety", "newton_tol", "fd_step",
    "horizon", "t0_grid", "amplitude", "exact", "nx_backward", "every",
})
RUN_MODES = ("two_sided", "one_sided", "one_sided_left", "one_sided_right")


@dataclass
class RunConfig:
    problem: Dict[str, Any]
    grid: Dict[str, Any] = field(default_factory=dict)
    spherical: Optional[Dict[str, Any]] = None
    options: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out: str = DEFAULT_OUT

    @property
    def settings(self) -> Settings:
        return settings_from(self.options)

    @property
    def mode(self) -> str:
        return normalize_mode(self.options.get("mode", "two_sided"))

    def echo(self) -> Dict[str, Any]:
        out = {"problem": self.problem, "grid": self.grid, "options": self.options, "seed": self.seed,
               "out": self.out}
        if self.spherical is not None:
            out["spherical"] = self.spherical
        return out


def normalize_mode(mode: str) -> str:
    if mode not in RUN_MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {RUN_MODES}")
    return "one_sided" if mode == "one_sided_left" else mode


def _section(raw: Mapping[str, Any], name: str, allowed: frozenset) -> Dict[str, Any]:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(value) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return dict(value)


def parse_config(raw: Any) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a single JSON object")
    unknown = set(raw) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if not isinstance(raw.get("problem"), dict):
        raise ConfigError("configuration needs a 'problem' object")

    grid = _section(raw, "grid", GRID_KEYS)
    for key in ("nx", "nt"):
        if key in grid and (not isinstance(grid[key], int) or isinstance(grid[key], bool) or grid[key] < 8):
            raise ConfigError(f"grid.{key} must be an integer >= 8")
    if "T" in grid and not (isinstance(grid["T"], (int, float)) and grid["T"] > 0):
        raise ConfigError("grid.T must be a positive number")

    spherical = None
    if "spherical" in raw:
        spherical = _section(raw, "spherical", SPHERICAL_KEYS)
        missing = SPHERICAL_KEYS - set(spherical)
        if missing:
            raise ConfigError(f"spherical section is missing {sorted(missing)}")

    options = _section(raw, "options", OPTION_KEYS)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    out = raw.get("out", DEFAULT_OUT)
    if not isinstance(out, str) or not out:
        raise ConfigError("out must be a non-empty path")

    cfg = RunConfig(dict(raw["problem"]), grid, spherical, options, seed, out)
    cfg.mode  # validates
    cfg.settings
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return parse_config(raw)


def build_problem(cfg: RunConfig) -> Problem:
    if cfg.spherical is None:
        return make_problem(cfg.problem)
    sph = cfg.spherical
    data = {k: v for k, v in cfg.problem.items() if k not in ("c", "f")}
    if "c" not in cfg.problem or "f" not in cfg.problem:
        raise ConfigError("spherical runs need c and f in the problem section")
    return reduce_spherical(int(sph["n"]), float(sph["r1"]), float(sph["r2"]),
                            cfg.problem["c"], cfg.problem["f"], data)


def run_grid(cfg: RunConfig, p: Problem) -> Grid:
    """[grid] → Grid on [t0, t0 + T]; nx defaults to the CFL-limited count."""
    T = float(cfg.grid.get("T", p.horizon))
    nt = int(cfg.grid.get("nt", 400))
    nx = cfg.grid.get("nx")
    if nx is None:
        nx = cfl_nx(p, p.t0, p.t0 + T, nt, cfg.settings.cfl_safety)
    return Grid(p.t0, p.t0 + T, int(nx), nt, p.L)


def t0_grid(options: Mapping[str, Any]) -> List[float]:
    entry = options.get("t0_grid", [0.0])
    if isinstance(entry, dict):
        unknown = set(entry) - {"start", "stop", "num"}
        if unknown:
            raise ConfigError(f"unknown keys in t0_grid: {sorted(unknown)}")
        return [float(v) for v in np.linspace(float(entry["start"]), float(entry["stop"]), int(entry.get("num", 41)))]
    if not isinstance(entry, list) or not entry:
        raise ConfigError("t0_grid must be a non-empty list or {start, stop, num}")
    return [float(v) for v in entry]


# ─────────────────────────── artifacts ──────────────────────────────
def write_csv(df: pd.DataFrame, path) -> Path:
    """Header row, ',' delimiter, '\\n' newlines, 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def versions() -> Dict[str, str]:
    return {
        "waveobs": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def write_manifest(
    out_dir,
    command: str,
    cfg: RunConfig,
    *,
    grid: Optional[Grid] = None,
    wall_time: float,
    artifacts: List[str],
    mode: Optional[str] = None,
    status: str = "ok",
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "mode": mode,
        "config": cfg.echo(),
        "grid": grid.describe() if grid is not None else None,
        "seed": cfg.seed,
        "versions": versions(),
        "wall_time": wall_time,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "status": status,
        "artifacts": artifacts,
    }
    if extra:
        manifest["diagnostics"] = extra
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def read_manifest(path) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"manifest is not valid JSON: {e}") from None


def list_runs(out_dir) -> List[Path]:
    """Run directories (those holding a manifest.json), newest first."""
    root = Path(out_dir)
    if not root.is_dir():
        return []
    runs = [p.parent for p in root.glob("*/manifest.json")]
    if (root / "manifest.json").is_file():
        runs.append(root)
    return sorted(runs, key=lambda p: (p / "manifest.json").stat().st_mtime, reverse=True)


# ────────────────────────── validators ───────────────────────────
valid_run = re.compile(r"^[A-Za-z][A-Za-z0-9_\-]*$").fullmatch


# ───────────────────────── dashboard widgets ─────────────────────────
BC_FORM_KINDS = ("dirichlet", "neumann", "robin", "dissipative")


def _boundary_editor(st, side: str, default: Mapping[str, Any]) -> Dict[str, Any]:
    kind = st.selectbox(f"{side} condition", BC_FORM_KINDS,
                        index=BC_FORM_KINDS.index(default.get("kind", "dirichlet")), key=f"bc_{side}_kind")
    form: Dict[str, Any] = {"kind": kind, "h": st.text_input(f"h_{side}(t)", str(default.get("h", "0")),
                                                             key=f"bc_{side}_h")}
    if kind == "robin":
        form["alpha"] = st.number_input(f"α ({side})", value=float(default.get("alpha", 1.0)), key=f"bc_{side}_a")
    if kind == "dissipative":
        form["beta"] = st.number_input(f"β ({side})", value=float(default.get("beta", 0.5)), key=f"bc_{side}_b")
    return form


def problem_editor(default_catalog: str = "linear-unit") -> Dict[str, Any]:
    """Sidebar form → raw `problem` section (catalog entry plus edited fields)."""
    import streamlit as st

    from problem import CATALOG, DEFAULTS

    names = sorted(CATALOG)
    with st.sidebar:
        st.subheader("Problem")
        name = st.selectbox("Catalog entry", names,
                            index=names.index(default_catalog) if default_catalog in names else 0)
        base = {**DEFAULTS, **CATALOG[name]}
        section: Dict[str, Any] = {"catalog": name}
        for key in ("c", "f", "phi", "psi"):
            value = st.text_input(key, str(base[key]), key=f"expr_{name}_{key}")
            if value != str(base[key]):
                section[key] = value
        L = st.number_input("L", value=float(base["L"]), min_value=1e-3)
        t0 = st.number_input("t0", value=float(base["t0"]))
        if L != base["L"]:
            section["L"] = L
        if t0 != base["t0"]:
            section["t0"] = t0
        section["bc_left"] = _boundary_editor(st, "left", base["bc_left"])
        section["bc_right"] = _boundary_editor(st, "right", base["bc_right"])
    return section


def grid_editor(T: float = 2.2, nt: int = 400) -> Dict[str, Any]:
    import streamlit as st

    with st.sidebar:
        st.subheader("Grid")
        grid = {"T": st.number_input("T", value=float(T), min_value=1e-3),
                "nt": int(st.number_input("nt", value=int(nt), min_value=8, step=50))}
        nx = int(st.number_input("nx (0 = from CFL)", value=0, min_value=0, step=25))
        if nx:
            grid["nx"] = max(nx, 8)
    return grid
