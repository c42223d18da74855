# reconstruct.py
"""
Initial-data reconstruction from boundary observations
──────────────────────────────────────────────────────
  traces (a, b) → sideways solve(s) → curves, D_r / D_l, T̃
  → (Φ, Ψ) at T̃ → backward mixed solve on [t0, T̃] → (φ̂, ψ̂) at t0

• reconstruct_two_sided(p, obs_left, obs_right, T)
• reconstruct_one_sided(p, obs_left, T)          – observed at x = 0
• reconstruct_one_sided_right(p, obs_right, T)   – observed at x = L
• random_initial_data / ratio_study              – observability-ratio trials
• convergence_ladder                             – grid-doubling error table
• result_frame                                   – x, φ̂, ψ̂ (+ truth and errors)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from charsys import check_degeneracy
from domains import Curve, Overlap, build_domain, find_Ttilde, trace_curves
from errors import DomainIntersectionError, TimeConditionError
from hypersolve import (
    CFL_SAFETY,
    Field,
    Grid,
    MIN_NODES,
    TimeSlice,
    cfl_nx,
    extract_time_slice,
    solve_cauchy_sideways,
    solve_mixed,
)
from observe import (
    Observation,
    TracePair,
    assemble_trace,
    forward_observations,
    observability_ratio,
)
from obstime import check_time_condition
from problem import EPSILON, Problem, SmallnessGuard, dirichlet, smallness_guard

logger = logging.getLogger(__name__)

MODES = ("two_sided", "one_sided", "one_sided_right")


@dataclass
class ReconstructionResult:
    mode: str
    x: np.ndarray
    phi_hat: np.ndarray
    psi_hat: np.ndarray
    T_tilde: float
    overlap_mismatch: float
    guard: SmallnessGuard
    ratio: float
    overlap: Optional[Overlap] = None
    corner_residual: float = 0.0
    curves: Dict[str, Curve] = field(default_factory=dict)
    fields: Dict[str, Field] = field(default_factory=dict)

    def errors(self, p: Problem) -> Tuple[float, float]:
        """sup |φ̂ − φ|, sup |ψ̂ − ψ| against the problem's own data."""
        return (
            float(np.max(np.abs(self.phi_hat - p.phi(self.x)))),
            float(np.max(np.abs(self.psi_hat - p.psi(self.x)))),
        )

    def diagnostics(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "T_tilde": self.T_tilde,
            "overlap_mismatch": self.overlap_mismatch,
            "corner_residual": self.corner_residual,
            "ratio": self.ratio,
            "c1_bound": self.guard.c1_bound,
            "epsilon": self.guard.epsilon,
            "guard_passed": self.guard.passed,
            "S": list(self.overlap.S) if self.overlap else None,
            "overlap_interval": list(self.overlap.interval) if self.overlap else None,
        }


# ───────────────────────────── helpers ──────────────────────────────
def _window(p: Problem, obs: Observation, T: Optional[float]) -> Tuple[Observation, float]:
    t0, t_end = obs.window
    if abs(t0 - p.t0) > 1e-9 * max(1.0, abs(p.t0)):
        raise ValueError(f"observation starts at t={t0:.6g}, problem at t0={p.t0:.6g}")
    if T is None:
        return obs, t_end - t0
    if T > t_end - t0 + 1e-9:
        raise ValueError(f"T={T} exceeds the observed window length {t_end - t0:.6g}")
    return obs.restrict(t0, t0 + T), float(T)


def _gate(p: Problem, T: float, mode: str, check_time: bool) -> None:
    if not check_time:
        return
    cond = check_time_condition(p, p.t0, T, "two_sided" if mode == "two_sided" else "one_sided")
    if not cond.passed:
        raise TimeConditionError(
            f"determinate domains do not intersect: integral of inf c over [{p.t0:.6g}, {p.t0 + T:.6g}] "
            f"is {cond.integral_value:.6g}, not above {cond.threshold:.6g} ({cond.status})"
        )


def _on_grid(s: TimeSlice, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Slice values at x, with validity restricted to the slice's masked interval."""
    rng = s.interval
    if rng is None:
        return (np.full(x.shape, np.nan),) * 3 + (np.zeros(x.shape, dtype=bool),)
    m = s.mask
    valid = (x >= rng[0] - 1e-12) & (x <= rng[1] + 1e-12)
    return (
        np.interp(x, s.x[m], s.u[m]),
        np.interp(x, s.x[m], s.v[m]),
        np.interp(x, s.x[m], s.w[m]),
        valid,
    )


def _covered(fields: Sequence[Field], n: int) -> bool:
    """Level n is spanned by one field, or by a (rightward, leftward) pair that overlaps."""
    L = fields[0].grid.L
    ranges = [f.row_range(n) for f in fields]
    if any(r is None for r in ranges):
        return False
    if len(ranges) == 1:
        lo, hi = ranges[0]
        return lo <= 1e-12 and hi >= L - 1e-12
    (lo, mid_hi), (mid_lo, hi) = ranges
    return lo <= 1e-12 and hi >= L - 1e-12 and mid_hi >= mid_lo


def _settle_level(fields: Sequence[Field], overlap: Overlap) -> float:
    """T̃ itself when the masks cover it, else the nearest covered level inside S."""
    t = fields[0].t
    n = int(np.argmin(np.abs(t - overlap.T_tilde)))
    if _covered(fields, n):
        return float(t[n])
    inside = np.flatnonzero((t >= overlap.S[0] - 1e-12) & (t <= overlap.S[1] + 1e-12))
    for k in sorted(inside, key=lambda k: abs(t[k] - overlap.T_tilde)):
        if _covered(fields, int(k)):
            logger.debug("T_tilde moved from %.6g to %.6g to stay inside the solved masks", t[n], t[k])
            return float(t[k])
    raise DomainIntersectionError(
        f"determinate domains do not intersect on the solved grid (S=[{overlap.S[0]:.6g}, {overlap.S[1]:.6g}])"
    )


def _backward_grid(p: Problem, obs: Observation, T_tilde: float, nx: Optional[int], cfl_safety: float) -> Grid:
    nt = int(round((T_tilde - p.t0) / obs.dt))
    nt = max(nt, MIN_NODES)
    if nx is None:
        nx = cfl_nx(p, p.t0, T_tilde, nt, cfl_safety)
    return Grid(p.t0, T_tilde, nx, nt, p.L)


def _guard(fields: Sequence[Field], epsilon: float) -> SmallnessGuard:
    bound = max(f.guard.c1_bound for f in fields if f.guard is not None)
    guard = SmallnessGuard(epsilon, bound)
    if not guard.passed:
        logger.warning("reconstruction left the small-data regime: C1 norm %.4g > epsilon %.4g", bound, epsilon)
    return guard


def _corner_residual(trace_sides: Sequence[TracePair], s: Tuple[np.ndarray, ...], T_tilde: float) -> float:
    u, _, w = s
    worst = 0.0
    for tr in trace_sides:
        j = 0 if tr.side == "left" else -1
        a = float(np.interp(T_tilde, tr.t, tr.a))
        worst = max(worst, abs(u[j] - a))
        if tr.a_t is not None:
            worst = max(worst, abs(w[j] - float(np.interp(T_tilde, tr.t, tr.a_t))))
    return worst


def _backward(
    p: Problem,
    g: Grid,
    initial: Tuple[np.ndarray, np.ndarray, np.ndarray],
    left: Optional[TracePair],
    right: Optional[TracePair],
    epsilon: float,
    cfl_safety: float,
) -> Field:
    bc_left = dirichlet("left", left.dirichlet_data()) if left is not None else p.bc_left
    bc_right = dirichlet("right", right.dirichlet_data()) if right is not None else p.bc_right
    return solve_mixed(
        p, g, "backward", initial, bc_left, bc_right, cfl_safety=cfl_safety, epsilon=epsilon,
    )


# ─────────────────────────── two-sided ──────────────────────────────
def reconstruct_two_sided(
    p: Problem,
    obs_left: Observation,
    obs_right: Observation,
    T: Optional[float] = None,
    *,
    nx: Optional[int] = None,
    check_time: bool = True,
    epsilon: float = EPSILON,
    cfl_safety: float = CFL_SAFETY,
) -> ReconstructionResult:
    obs_left, T = _window(p, obs_left, T)
    obs_right, _ = _window(p, obs_right, T)
    _gate(p, T, "two_sided", check_time)

    left = assemble_trace(obs_left, p.bc_left)
    right = assemble_trace(obs_right, p.bc_right)
    rightward = solve_cauchy_sideways(p, left.to_sideways(), epsilon=epsilon)
    leftward = solve_cauchy_sideways(p, right.to_sideways(), epsilon=epsilon)

    curves = {**trace_curves(p, rightward, ("x1", "x2")), **trace_curves(p, leftward, ("x3", "x4"))}
    dr = build_domain([curves["x1"], curves["x2"]], "right", p.L)
    dl = build_domain([curves["x3"], curves["x4"]], "left", p.L)
    _, overlap = find_Ttilde(dr, dl, "two_sided")
    T_tilde = _settle_level([rightward, leftward], overlap)

    g = _backward_grid(p, obs_left, T_tilde, nx, cfl_safety)
    x = g.x
    *from_left, ok_left = _on_grid(extract_time_slice(rightward, T_tilde), x)
    *from_right, ok_right = _on_grid(extract_time_slice(leftward, T_tilde), x)
    both = ok_left & ok_right
    mismatch = 0.0
    if both.any():
        mismatch = float(max(
            np.max(np.abs(from_left[0][both] - from_right[0][both])),
            np.max(np.abs(from_left[2][both] - from_right[2][both])),
        ))
    if not np.all(ok_left | ok_right):
        gap = x[~(ok_left | ok_right)]
        raise DomainIntersectionError(
            f"determinate domains do not intersect at T~={T_tilde:.6g}: x in [{gap[0]:.6g}, {gap[-1]:.6g}] uncovered"
        )

    x_glue = 0.5 * (overlap.interval[0] + overlap.interval[1])
    use_left = np.where(ok_left & ok_right, x <= x_glue, ok_left)
    glued = tuple(np.where(use_left, a, b) for a, b in zip(from_left, from_right))

    back = _backward(p, g, glued, left, right, epsilon, cfl_safety)
    phi_hat, psi_hat = back.u[0].copy(), back.w[0].copy()
    fields = {"rightward": rightward, "leftward": leftward, "backward": back}
    result = ReconstructionResult(
        mode="two_sided",
        x=x,
        phi_hat=phi_hat,
        psi_hat=psi_hat,
        T_tilde=T_tilde,
        overlap_mismatch=mismatch,
        guard=_guard(list(fields.values()), epsilon),
        ratio=observability_ratio(p, (phi_hat, psi_hat), [obs_left, obs_right], "two_sided", dx=g.dx),
        overlap=overlap,
        corner_residual=_corner_residual([left, right], glued, T_tilde),
        curves=curves,
        fields=fields,
    )
    logger.info("two-sided reconstruction: T~=%.6g, glue at x=%.4g, mismatch %.3e", T_tilde, x_glue, mismatch)
    return result


# ─────────────────────────── one-sided ──────────────────────────────
def _one_sided(
    p: Problem,
    obs: Observation,
    T: Optional[float],
    side: str,
    nx: Optional[int],
    check_time: bool,
    epsilon: float,
    cfl_safety: float,
) -> ReconstructionResult:
    bc_obs = p.boundary(side)
    if obs.side != side:
        raise ValueError(f"expected an observation at the {side} boundary, got {obs.side}")
    obs, T = _window(p, obs, T)
    mode = "one_sided" if side == "left" else "one_sided_right"
    far = p.bc_right if side == "left" else p.bc_left
    check_degeneracy(p, far, obs.t)
    _gate(p, T, mode, check_time)

    trace = assemble_trace(obs, bc_obs)
    sideways = solve_cauchy_sideways(p, trace.to_sideways(), epsilon=epsilon)
    labels = ("x1", "x2") if side == "left" else ("x3", "x4")
    curves = trace_curves(p, sideways, labels)
    domain = build_domain(list(curves.values()), "right" if side == "left" else "left", p.L)
    if side == "left":
        _, overlap = find_Ttilde(domain, None, mode)
    else:
        _, overlap = find_Ttilde(None, domain, mode)
    T_tilde = _settle_level([sideways], overlap)

    g = _backward_grid(p, obs, T_tilde, nx, cfl_safety)
    *state, ok = _on_grid(extract_time_slice(sideways, T_tilde), g.x)
    if not ok.all():
        raise DomainIntersectionError(f"determinate domain does not traverse [0, L] at T~={T_tilde:.6g}")
    state = tuple(state)

    back = _backward(
        p, g, state,
        trace if side == "left" else None,
        trace if side == "right" else None,
        epsilon, cfl_safety,
    )
    phi_hat, psi_hat = back.u[0].copy(), back.w[0].copy()
    fields = {"rightward" if side == "left" else "leftward": sideways, "backward": back}
    result = ReconstructionResult(
        mode=mode,
        x=g.x,
        phi_hat=phi_hat,
        psi_hat=psi_hat,
        T_tilde=T_tilde,
        overlap_mismatch=0.0,
        guard=_guard(list(fields.values()), epsilon),
        ratio=observability_ratio(p, (phi_hat, psi_hat), [obs], mode, dx=g.dx),
        overlap=overlap,
        corner_residual=_corner_residual([trace], state, T_tilde),
        curves=curves,
        fields=fields,
    )
    logger.info("%s reconstruction: T~=%.6g", mode, T_tilde)
    return result


def reconstruct_one_sided(
    p: Problem,
    obs: Observation,
    T: Optional[float] = None,
    *,
    nx: Optional[int] = None,
    check_time: bool = True,
    epsilon: float = EPSILON,
    cfl_safety: float = CFL_SAFETY,
) -> ReconstructionResult:
    """Observed at x = 0; the backward solve keeps the original condition at x = L."""
    return _one_sided(p, obs, T, "left", nx, check_time, epsilon, cfl_safety)


def reconstruct_one_sided_right(
    p: Problem,
    obs: Observation,
    T: Optional[float] = None,
    *,
    nx: Optional[int] = None,
    check_time: bool = True,
    epsilon: float = EPSILON,
    cfl_safety: float = CFL_SAFETY,
) -> ReconstructionResult:
    """Observed at x = L; the backward solve keeps the original condition at x = 0."""
    return _one_sided(p, obs, T, "right", nx, check_time, epsilon, cfl_safety)


def reconstruct(
    p: Problem,
    observations: Dict[str, Observation],
    mode: str,
    T: Optional[float] = None,
    **kwargs: Any,
) -> ReconstructionResult:
    if mode == "two_sided":
        return reconstruct_two_sided(p, observations["left"], observations["right"], T, **kwargs)
    if mode == "one_sided":
        return reconstruct_one_sided(p, observations["left"], T, **kwargs)
    if mode == "one_sided_right":
        return reconstruct_one_sided_right(p, observations["right"], T, **kwargs)
    raise ValueError(f"unknown mode {mode!r}")


# ──────────────────────────── studies ───────────────────────────────
def random_initial_data(
    rng: np.random.Generator,
    amplitude: float,
    L: float = 1.0,
    modes: int = 3,
) -> Tuple[str, str]:
    """
    Sine series φ, ψ vanishing at both ends (so zero Dirichlet data stays
    compatible to second order), with sup-norm at most `amplitude`.
    """
    def series(coeffs: np.ndarray) -> str:
        coeffs = amplitude * coeffs / max(np.sum(np.abs(coeffs)), 1e-300)
        terms = [f"{float(a)!r}*sin({k}*pi*x/{float(L)!r})" for k, a in enumerate(coeffs, start=1)]
        return " + ".join(terms)

    phi = series(rng.uniform(-1.0, 1.0, modes))
    psi = series(rng.uniform(-1.0, 1.0, modes))
    return phi, psi


def ratio_study(
    p: Problem,
    grid: Grid,
    trials: int = 50,
    amplitude: float = 0.05,
    seed: int = 0,
    mode: str = "two_sided",
) -> pd.DataFrame:
    """Observability ratio on the true data of `trials` random instances, plus the half-scaled copy."""
    rng = np.random.default_rng(seed)
    rows: List[Dict[str, Any]] = []
    x = grid.x
    for trial in range(trials):
        phi, psi = random_initial_data(rng, amplitude, p.L)
        ratios = []
        for scale in (1.0, 0.5):
            q = p.with_data(f"{scale!r}*({phi})", f"{scale!r}*({psi})")
            _, left, right = forward_observations(q, grid)
            ratios.append(observability_ratio(q, (q.phi(x), q.psi(x)), [left, right], mode, dx=grid.dx))
        rows.append({"trial": trial, "nx": grid.nx, "nt": grid.nt, "ratio": ratios[0], "ratio_half": ratios[1],
                     "phi": phi, "psi": psi})
    out = pd.DataFrame(rows)
    logger.info("ratio study: %d trials, max ratio %.4g", trials, out["ratio"].max())
    return out


def convergence_ladder(
    p: Problem,
    grid: Grid,
    levels: int = 4,
    mode: str = "two_sided",
) -> pd.DataFrame:
    """Forward-simulate, observe and reconstruct on successively doubled grids."""
    rows: List[Dict[str, Any]] = []
    previous = None
    for level in range(levels):
        _, left, right = forward_observations(p, grid)
        result = reconstruct(p, {"left": left, "right": right}, mode, nx=grid.nx)
        e_phi, e_psi = result.errors(p)
        err = e_phi + e_psi
        rows.append({
            "level": level, "nx": grid.nx, "nt": grid.nt, "T_tilde": result.T_tilde,
            "error_phi": e_phi, "error_psi": e_psi, "error": err,
            "ratio": previous / err if previous and err > 0 else np.nan,
            "overlap_mismatch": result.overlap_mismatch,
        })
        logger.info("reconstruction ladder level %d (%dx%d): error %.3e", level, grid.nx, grid.nt, err)
        previous = err
        grid = grid.refined()
    return pd.DataFrame(rows)


def result_frame(result: ReconstructionResult, p: Optional[Problem] = None) -> pd.DataFrame:
    out = pd.DataFrame({"x": result.x, "phi_hat": result.phi_hat, "psi_hat": result.psi_hat})
    if p is not None:
        out["phi_true"] = p.phi(result.x)
        out["psi_true"] = p.psi(result.x)
        out["error"] = np.abs(out["phi_hat"] - out["phi_true"]) + np.abs(out["psi_hat"] - out["psi_true"])
    return out
