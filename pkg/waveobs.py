# waveobs.py
"""
Command-line front end
──────────────────────
  python waveobs.py <command> --config run.json [--mode two_sided|one_sided_left|one_sided_right]
                              [--out DIR] [--seed N] [--log-level LEVEL]

  simulate      forward mixed solve; field.csv, compatibility.csv
  observe       simulate + boundary observations, traces and norms
  reconstruct   observe (or --observations CSV) + reconstruction; result.csv, curves.csv
  obstime       time condition, T*, and with --classify the t0 table
  convergence   grid-doubling ladder (forward against options.exact, else reconstruction)
  ratio         observability ratio over random small data
  spherical     radial reduction of the [spherical] section, then --delegate command
  replay        rerun a manifest (--manifest PATH)

Exit status: 0 ok, 2 invalid configuration or hypotheses, 3 pipeline failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from domains import curves_frame
from errors import ConfigError, ExprError, ProblemError, WaveObsError
from hypersolve import Grid, forward_error_ladder, solve_mixed
from observe import (
    Observation,
    assemble_trace,
    forward_observations,
    norms_frame,
    observation_frame,
    trace_frame,
)
from obstime import (
    NEVER,
    check_strengthened_condition,
    classification_frame,
    classify_initial_times,
    condition_summary,
)
from problem import Problem, check_compatibility
from reconstruct import convergence_ladder, ratio_study, reconstruct, result_frame
from run_utils import (
    RunConfig,
    build_problem,
    load_config,
    normalize_mode,
    parse_config,
    read_manifest,
    run_grid,
    setup_logging,
    t0_grid,
    write_csv,
    write_manifest,
)

logger = logging.getLogger("waveobs")

EXIT_OK, EXIT_INVALID, EXIT_PIPELINE = 0, 2, 3
COMMANDS = ("simulate", "observe", "reconstruct", "obstime", "convergence", "ratio", "spherical", "replay")
DELEGATES = ("simulate", "observe", "reconstruct", "obstime", "convergence", "ratio")

Outcome = Tuple[List[str], Optional[Grid], Dict[str, Any]]


# ───────────────────────────── commands ─────────────────────────────
def cmd_simulate(p: Problem, cfg: RunConfig, args, out: Path) -> Outcome:
    s = cfg.settings
    g = run_grid(cfg, p)
    field = solve_mixed(p, g, cfl_safety=s.cfl_safety, epsilon=s.epsilon, newton_tol=s.newton_tol)
    report = check_compatibility(p, tol=s.compat_tol, step=s.fd_step)
    every = int(cfg.options.get("every", 1))
    write_csv(field.to_frame(every), out / "field.csv")
    write_csv(pd.DataFrame(report.rows()), out / "compatibility.csv")
    return ["field.csv", "compatibility.csv"], g, {
        "c1_bound": field.guard.c1_bound, "guard_passed": field.guard.passed,
        "compatibility_passed": report.passed,
    }


def cmd_observe(p: Problem, cfg: RunConfig, args, out: Path) -> Outcome:
    g = run_grid(cfg, p)
    _, left, right = forward_observations(p, g)
    traces = [assemble_trace(left, p.bc_left), assemble_trace(right, p.bc_right)]
    write_csv(observation_frame([left, right]), out / "observations.csv")
    write_csv(trace_frame(traces), out / "traces.csv")
    write_csv(norms_frame(p, [left, right]), out / "norms.csv")
    return ["observations.csv", "traces.csv", "norms.csv"], g, {}


def load_observations(p: Problem, path) -> Dict[str, Observation]:
    """t, k_left, k_right columns as written by `observe`."""
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise ConfigError(f"observation file not found: {path}") from None
    if "t" not in df.columns:
        raise ConfigError("observation CSV needs a 't' column")
    found = {}
    for side in ("left", "right"):
        col = f"k_{side}"
        if col in df.columns:
            found[side] = Observation(side, p.boundary(side).kind, df["t"].to_numpy(float), df[col].to_numpy(float))
    if not found:
        raise ConfigError("observation CSV has neither k_left nor k_right")
    return found


def cmd_reconstruct(p: Problem, cfg: RunConfig, args, out: Path) -> Outcome:
    s = cfg.settings
    mode = normalize_mode(args.mode or cfg.mode)
    artifacts: List[str] = []
    if getattr(args, "observations", None):
        observations = load_observations(p, args.observations)
        t = next(iter(observations.values())).t
        g = None
        T = float(cfg.grid.get("T", t[-1] - t[0]))
    else:
        g = run_grid(cfg, p)
        _, left, right = forward_observations(p, g)
        observations = {"left": left, "right": right}
        write_csv(observation_frame([left, right]), out / "observations.csv")
        artifacts.append("observations.csv")
        T = g.t1 - g.t0
    result = reconstruct(
        p, observations, mode, T,
        nx=cfg.options.get("nx_backward"), epsilon=s.epsilon, cfl_safety=s.cfl_safety,
    )
    write_csv(result_frame(result, p), out / "result.csv")
    write_csv(curves_frame(result.curves.values()), out / "curves.csv")
    artifacts += ["result.csv", "curves.csv"]
    e_phi, e_psi = result.errors(p)
    return artifacts, g, {**result.diagnostics(), "error_phi": e_phi, "error_psi": e_psi}


def cmd_obstime(p: Problem, cfg: RunConfig, args, out: Path) -> Outcome:
    mode = normalize_mode(args.mode or cfg.mode)
    horizon = float(cfg.options.get("horizon", p.horizon))
    t0s = t0_grid(cfg.options) if "t0_grid" in cfg.options else [p.t0]
    T = float(cfg.grid.get("T", horizon))
    rows = []
    for t0 in t0s:
        row = condition_summary(p, t0, T, mode, horizon)
        strong = check_strengthened_condition(p, t0, T, cfg.settings.epsilon, mode)
        if row["T_star"] == NEVER:
            row["T_star"] = np.nan
        row["strengthened_integral"] = strong.integral_value
        row["strengthened_passed"] = strong.passed
        rows.append(row)
    write_csv(pd.DataFrame(rows), out / "obstime.csv")
    artifacts = ["obstime.csv"]
    extra: Dict[str, Any] = {}
    if args.classify:
        c = classify_initial_times(p, t0s, mode, horizon)
        write_csv(classification_frame(c), out / "classification.csv")
        artifacts.append("classification.csv")
        extra["classification"] = c.label
    return artifacts, None, extra


def cmd_convergence(p: Problem, cfg: RunConfig, args, out: Path) -> Outcome:
    g = run_grid(cfg, p)
    levels = int(cfg.options.get("levels", 3))
    if "exact" in cfg.options:
        table = forward_error_ladder(p, str(cfg.options["exact"]), g, levels)
    else:
        table = convergence_ladder(p, g, levels, normalize_mode(args.mode or cfg.mode))
    write_csv(table, out / "convergence.csv")
    return ["convergence.csv"], g, {"errors": table["error"].tolist()}


def cmd_ratio(p: Problem, cfg: RunConfig, args, out: Path) -> Outcome:
    g = run_grid(cfg, p)
    seed = cfg.seed if args.seed is None else args.seed
    table = ratio_study(
        p, g,
        trials=int(cfg.options.get("trials", 50)),
        amplitude=float(cfg.options.get("amplitude", 0.05)),
        seed=seed,
        mode=normalize_mode(args.mode or cfg.mode),
    )
    write_csv(table, out / "ratios.csv")
    return ["ratios.csv"], g, {"max_ratio": float(table["ratio"].max())}


HANDLERS: Dict[str, Callable[..., Outcome]] = {
    "simulate": cmd_simulate,
    "observe": cmd_observe,
    "reconstruct": cmd_reconstruct,
    "obstime": cmd_obstime,
    "convergence": cmd_convergence,
    "ratio": cmd_ratio,
}


# ───────────────────────────── driver ───────────────────────────────
def _recorded_path(path, out: Path) -> Optional[str]:
    """Input files are recorded relative to the run directory so a moved run still replays."""
    if not path:
        return None
    return Path(os.path.relpath(Path(path).resolve(), Path(out).resolve())).as_posix()


def execute(command: str, cfg: RunConfig, args, out: Path) -> int:
    started = time.perf_counter()
    if command == "spherical":
        if cfg.spherical is None:
            raise ConfigError("spherical command needs a 'spherical' section")
        delegate = args.delegate
    else:
        delegate = command
    p = build_problem(cfg)
    artifacts, grid, extra = HANDLERS[delegate](p, cfg, args, out)
    if command == "spherical":
        extra = {**extra, "reduced_problem": p.describe(), "delegate": delegate}
    mode = normalize_mode(args.mode or cfg.mode)
    write_manifest(
        out, command, cfg,
        grid=grid, wall_time=time.perf_counter() - started, artifacts=artifacts, mode=mode,
        extra={**extra, "argv": {"classify": bool(args.classify), "delegate": args.delegate,
                               "observations": _recorded_path(getattr(args, "observations", None), out)}},
    )
    logger.info("%s finished: %s written to %s", command, ", ".join(artifacts), out)
    return EXIT_OK


def run_command(
    command: str,
    cfg: RunConfig,
    out,
    *,
    mode: Optional[str] = None,
    classify: bool = False,
    delegate: str = "simulate",
    observations=None,
    seed: Optional[int] = None,
) -> int:
    """Programmatic entry (dashboard, replay): same as the CLI minus argument parsing."""
    ns = argparse.Namespace(mode=mode, classify=classify, delegate=delegate, observations=observations, seed=seed)
    return execute(command, cfg, ns, Path(out))


def replay_manifest(manifest_path, out=None) -> int:
    """Rerun the command a manifest records, with its config and seed, into `out` (default: alongside)."""
    manifest = read_manifest(manifest_path)
    cfg = parse_config(manifest["config"])
    recorded = (manifest.get("diagnostics") or {}).get("argv", {})
    run_dir = Path(manifest_path).parent
    out = Path(out) if out is not None else run_dir
    cfg.out = str(out)
    if manifest.get("seed") is not None:
        cfg.seed = int(manifest["seed"])
    observations = recorded.get("observations")
    if observations:
        observations = str(run_dir / observations)
    return run_command(
        manifest["command"], cfg, out,
        mode=manifest.get("mode"),
        classify=recorded.get("classify", False),
        delegate=recorded.get("delegate") or "simulate",
        observations=observations,
        seed=manifest.get("seed"),
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="waveobs", description="Boundary observability for 1-D quasilinear waves")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--mode", choices=("two_sided", "one_sided", "one_sided_left", "one_sided_right"))
    ap.add_argument("--out", help="output directory (default: config 'out')")
    ap.add_argument("--seed", type=int, help="rng seed for random-data studies")
    ap.add_argument("--classify", action="store_true", help="obstime: classify the t0 grid")
    ap.add_argument("--observations", help="reconstruct: observation CSV instead of a forward solve")
    ap.add_argument("--delegate", choices=DELEGATES, default="simulate", help="spherical: command to run")
    ap.add_argument("--manifest", help="replay: manifest.json to rerun")
    ap.add_argument("--log-level", default="INFO")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging(args.log_level)
        if args.command == "replay":
            if not args.manifest:
                raise ConfigError("replay needs --manifest")
            return replay_manifest(args.manifest, args.out)
        if not args.config:
            raise ConfigError(f"{args.command} needs --config")
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        out = Path(args.out or cfg.out)
        cfg.out = str(out)
        return execute(args.command, cfg, args, out)
    except (ConfigError, ExprError, ProblemError) as e:
        print(f"{e.module}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except WaveObsError as e:
        print(f"{e.module}: {e}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
