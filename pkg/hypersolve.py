# hypersolve.py
"""
Characteristic (CIR) solvers for u_t = w, v_t = w_x, w_t = c² v_x + f
──────────────────────────────────────────────────────────────────────
• Grid / Field / SidewaysData / TimeSlice
• solve_mixed(p, g, direction)        – forward or backward in t on [0, L]
• solve_cauchy_sideways(p, data)      – march in x from boundary traces (u, u_x),
                                        masked to the determinate domain
• extract_time_slice(field, t)        – (u, u_t) at one time on the valid x-range
• forward_error_ladder(...)           – grid-doubling study against a closed form

Fields always store rows in ascending t and columns in ascending x,
whichever way the solve marched.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from charsys import NEWTON_TOL, CharState, boundary_state
from errors import CFLViolation, GridError, SpeedError, TraversalError, WindowError
from expr import compile_expression
from problem import (
    EPSILON,
    BoundaryCondition,
    CompatibilityReport,
    Problem,
    SmallnessGuard,
    check_compatibility,
    smallness_guard,
)

logger = logging.getLogger(__name__)

MIN_NODES = 8
CFL_SAFETY = 0.8
SWEEP = 64
LEVEL_TOL = 1e-9


# ───────────────────────────── types ────────────────────────────────
@dataclass(frozen=True)
class Grid:
    t0: float
    t1: float
    nx: int
    nt: int
    L: float = 1.0

    def __post_init__(self):
        if self.nx < MIN_NODES or self.nt < MIN_NODES:
            raise GridError(f"grid needs nx, nt >= {MIN_NODES}, got nx={self.nx}, nt={self.nt}")
        if not self.t1 > self.t0:
            raise GridError(f"empty time window [{self.t0}, {self.t1}]")
        if not self.L > 0:
            raise GridError(f"interval length must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.nx

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.nt

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt + 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.nx + 1)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.t0, self.t1, self.nx * factor, self.nt * factor, self.L)

    def describe(self) -> Dict[str, Any]:
        return {"t0": self.t0, "t1": self.t1, "nx": self.nx, "nt": self.nt, "L": self.L,
                "dx": self.dx, "dt": self.dt}


@dataclass
class Field:
    """Solution (u, u_x, u_t) on grid levels × nodes; NaN outside the mask."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    mask: np.ndarray
    direction: str = "forward"
    guard: Optional[SmallnessGuard] = None
    compatibility: Optional[CompatibilityReport] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def row_range(self, n: int) -> Optional[Tuple[float, float]]:
        """Valid x-interval on level n (None when the row is masked out)."""
        idx = np.flatnonzero(self.mask[n])
        if idx.size == 0:
            return None
        return float(self.x[idx[0]]), float(self.x[idx[-1]])

    def to_frame(self, every: int = 1) -> pd.DataFrame:
        """Long-format table of masked-in cells, every `every`-th level."""
        rows = np.arange(0, self.grid.nt + 1, max(1, every))
        tt, xx = np.meshgrid(self.t[rows], self.x, indexing="ij")
        m = self.mask[rows]
        return pd.DataFrame({
            "t": tt[m], "x": xx[m],
            "u": self.u[rows][m], "u_x": self.v[rows][m], "u_t": self.w[rows][m],
        })


@dataclass(frozen=True)
class SidewaysData:
    side: str           # where the traces live: left (x=0) or right (x=L)
    t: np.ndarray
    a: np.ndarray       # u on the boundary
    b: np.ndarray       # u_x on the boundary
    a_t: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"unknown side {self.side!r}")
        if not (len(self.t) == len(self.a) == len(self.b)):
            raise GridError("a and b must share the t-sampling")
        if not np.all(np.isfinite(self.a)) or not np.all(np.isfinite(self.b)):
            raise GridError("sideways data must be finite")
        steps = np.diff(self.t)
        if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise GridError("sideways data must be sampled on a uniform t-grid")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def window(self) -> Tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def velocity(self) -> np.ndarray:
        """u_t on the boundary: the given a_t or a second-order difference of a."""
        if self.a_t is not None:
            return np.asarray(self.a_t, dtype=float)
        return np.gradient(self.a, self.dt, edge_order=2)


@dataclass(frozen=True)
class TimeSlice:
    t: float
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    mask: np.ndarray

    @property
    def interval(self) -> Optional[Tuple[float, float]]:
        idx = np.flatnonzero(self.mask)
        if idx.size == 0:
            return None
        return float(self.x[idx[0]]), float(self.x[idx[-1]])


# ─────────────────────────── helpers ────────────────────────────────
def _checked_speed(p: Problem, t, x, u, v, w) -> np.ndarray:
    c = p.speed(t, x, u, v, w)
    bad = ~(c > 0)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise SpeedError(f"propagation speed is not positive at node {j} of the level being advanced")
    return c


def sweep_speed(p: Problem, t0: float, t1: float, n: int = SWEEP) -> Tuple[float, float]:
    """(min c, max c) at zero state over an n × n lattice of the window."""
    tt, xx = np.meshgrid(np.linspace(t0, t1, n), np.linspace(0.0, p.L, n), indexing="ij")
    c = p.speed(tt, xx)
    if np.any(~(c > 0)):
        raise SpeedError(f"propagation speed is not positive on the window [{t0:.6g}, {t1:.6g}]")
    return float(np.min(c)), float(np.max(c))


def cfl_nx(p: Problem, t0: float, t1: float, nt: int, safety: float = CFL_SAFETY) -> int:
    """Largest nx keeping c_max·dt/dx ≤ safety on the window."""
    _, c_max = sweep_speed(p, t0, t1)
    dt = (t1 - t0) / nt
    return max(MIN_NODES, int(math.floor(safety * p.L / (c_max * dt))))


def _h_values(bc: BoundaryCondition, t: float) -> Tuple[float, float]:
    tt = np.array([t])
    return float(bc.h(tt)[0]), float(bc.h.derivative(tt)[0])


# ──────────────────────────── mixed solve ───────────────────────────
def solve_mixed(
    p: Problem,
    g: Grid,
    direction: str = "forward",
    initial: Optional[Sequence[np.ndarray]] = None,
    bc_left: Optional[BoundaryCondition] = None,
    bc_right: Optional[BoundaryCondition] = None,
    *,
    cfl_safety: float = CFL_SAFETY,
    epsilon: float = EPSILON,
    newton_tol: float = NEWTON_TOL,
) -> Field:
    """
    CIR march of the mixed problem on [0, L] × [g.t0, g.t1].

    `initial` gives (u, u_t) or (u, u_x, u_t) on the starting level (g.t0
    forward, g.t1 backward); it defaults to p's (φ, φ', ψ). The backward
    direction runs the same scheme under t ↦ −t with physical w kept.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown direction {direction!r}")
    if abs(g.L - p.L) > 1e-12 * p.L:
        raise GridError(f"grid length {g.L} does not match problem length {p.L}")
    bc_left = bc_left or p.bc_left
    bc_right = bc_right or p.bc_right
    sigma = 1.0 if direction == "forward" else -1.0
    started = time.perf_counter()

    x, t = g.x, g.t
    dt, dx = g.dt, g.dx
    _, c_max = sweep_speed(p, g.t0, g.t1)
    nu0 = c_max * dt / dx
    if nu0 > cfl_safety:
        raise CFLViolation(
            f"CFL number {nu0:.3f} exceeds safety {cfl_safety} (c_max={c_max:.4g}, dt={dt:.4g}, dx={dx:.4g})"
        )

    report = None
    if initial is None:
        report = check_compatibility(p)
        u0, v0, w0 = p.initial_state(x)
    elif len(initial) == 2:
        u0 = np.asarray(initial[0], dtype=float)
        w0 = np.asarray(initial[1], dtype=float)
        v0 = np.gradient(u0, dx, edge_order=2)
    else:
        u0, v0, w0 = (np.asarray(a, dtype=float) for a in initial)

    shape = (g.nt + 1, g.nx + 1)
    U, V, W = np.empty(shape), np.empty(shape), np.empty(shape)
    order = range(g.nt + 1) if sigma > 0 else range(g.nt, -1, -1)
    levels = list(order)
    n0 = levels[0]
    U[n0], V[n0], W[n0] = u0, v0, w0
    logger.debug("%s mixed solve: grid %dx%d, CFL %.3f", direction, g.nx, g.nt, nu0)

    for n_old, n_new in zip(levels[:-1], levels[1:]):
        t_old, t_new = t[n_old], t[n_new]
        u, v, w = U[n_old], V[n_old], W[n_old]
        c = _checked_speed(p, t_old, x, u, v, w)
        nu = np.max(c) * dt / dx
        if nu > 1.0 + 1e-12:
            raise CFLViolation(f"CFL number {nu:.3f} exceeded 1 at t={t_old:.6g}; c grew past the safety margin")
        f = p.source(t_old, x, u, v, w)

        foot1 = np.clip(x + sigma * c * dt, 0.0, g.L)
        foot3 = np.clip(x - sigma * c * dt, 0.0, g.L)
        A = c * np.interp(foot1, x, v) + np.interp(foot1, x, w) + sigma * dt * np.interp(foot1, x, f)
        B = -c * np.interp(foot3, x, v) + np.interp(foot3, x, w) + sigma * dt * np.interp(foot3, x, f)

        v_new = (A - B) / (2.0 * c)
        w_new = 0.5 * (A + B)
        u_new = u + 0.5 * sigma * dt * (w + w_new)

        for j, bc, v1_known in ((0, bc_left, sigma > 0), (g.nx, bc_right, sigma < 0)):
            h_val, h_deriv = _h_values(bc, t_new)
            known = A[j] if v1_known else B[j]
            u_pred = u[j] + sigma * dt * w[j]
            for _ in range(1 if bc.kind == "dirichlet" else 2):
                partial = CharState(known, u_pred, None) if v1_known else CharState(None, u_pred, known)
                s = boundary_state(p, bc, t_new, partial, h_val, h_deriv, speed=float(c[j]), tol=newton_tol)
                u_pred = u[j] + 0.5 * sigma * dt * (w[j] + s.w)
            u_new[j], v_new[j], w_new[j] = s.u, s.v, s.w

        U[n_new], V[n_new], W[n_new] = u_new, v_new, w_new

    out = Field(g, U, V, W, np.ones(shape, dtype=bool), direction=direction, compatibility=report)
    out.guard = smallness_guard(out, epsilon)
    logger.debug("%s mixed solve finished in %.3fs", direction, time.perf_counter() - started)
    return out


# ─────────────────────────── sideways solve ─────────────────────────
def sideways_speed_floor(p: Problem, data: SidewaysData, margin: float = 1.5, n: int = SWEEP) -> float:
    """
    Smallest c over the window lattice for states within `margin` times the
    traces' C¹ size. Equals the zero-state minimum when c ignores the state.
    """
    tt, xx = np.meshgrid(data.t, np.linspace(0.0, p.L, n), indexing="ij")
    c = p.speed(tt, xx)
    if np.any(~(c > 0)):
        raise SpeedError("propagation speed is not positive on the sideways window")
    c_min = float(np.min(c))
    if not p.c.variables & {"u", "v", "w"}:
        return c_min
    size = margin * max(np.max(np.abs(data.a)), np.max(np.abs(data.b)), np.max(np.abs(data.velocity())))
    for su in (-size, 0.0, size):
        for sv in (-size, 0.0, size):
            for sw in (-size, 0.0, size):
                c = p.speed(tt, xx, su, sv, sw)
                if np.any(~(c > 0)):
                    raise SpeedError("propagation speed is not positive for states of the traces' size")
                c_min = min(c_min, float(np.min(c)))
    return c_min


def sideways_grid(p: Problem, data: SidewaysData) -> Grid:
    """x-step dx = L / ceil(L / (dt · c_floor)) on the data's own t-sampling."""
    t0, t1 = data.window
    c_floor = sideways_speed_floor(p, data)
    nx = max(MIN_NODES, int(math.ceil(p.L / (data.dt * c_floor) - 1e-9)))
    return Grid(t0, t1, nx, len(data.t) - 1, p.L)


def solve_cauchy_sideways(
    p: Problem,
    data: SidewaysData,
    g: Optional[Grid] = None,
    *,
    require_traversal: bool = False,
    epsilon: float = EPSILON,
) -> Field:
    """
    Exchange the roles of t and x: march from the traced side across [0, L].

    Each new column keeps only levels whose three neighbours on the previous
    column were valid, so the mask shrinks one level per column from either
    window end and stays inside the domain of dependence of the data.
    """
    g = g or sideways_grid(p, data)
    if g.nt != len(data.t) - 1 or abs(g.dt - data.dt) > 1e-12 * max(1.0, abs(data.dt)):
        raise GridError("sideways grid must reuse the data's t-sampling")
    sx = 1.0 if data.side == "left" else -1.0
    t, x = data.t, g.x
    dx = g.dx
    started = time.perf_counter()

    shape = (g.nt + 1, g.nx + 1)
    U, V, W = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
    mask = np.zeros(shape, dtype=bool)
    columns = list(range(g.nx + 1)) if sx > 0 else list(range(g.nx, -1, -1))
    j0 = columns[0]
    U[:, j0], V[:, j0], W[:, j0] = data.a, data.b, data.velocity()
    mask[:, j0] = True
    logger.debug("sideways solve from the %s: grid %dx%d, dx/dt %.4f", data.side, g.nx, g.nt, dx / g.dt)

    reached = j0
    for j_old, j_new in zip(columns[:-1], columns[1:]):
        valid = mask[:, j_old]
        new_valid = valid.copy()
        new_valid[1:] &= valid[:-1]
        new_valid[:-1] &= valid[1:]
        new_valid[0] = new_valid[-1] = False
        if not new_valid.any():
            break

        u = np.where(valid, U[:, j_old], 0.0)
        v = np.where(valid, V[:, j_old], 0.0)
        w = np.where(valid, W[:, j_old], 0.0)
        x_old = x[j_old]
        c = _checked_speed(p, t, x_old, u, v, w)
        f = p.source(t, x_old, u, v, w)
        mu = dx / (c * g.dt)
        if np.any(mu[new_valid] > 1.0 + 1e-9):
            raise CFLViolation(
                f"sideways CFL number {np.max(mu[new_valid]):.3f} exceeded 1 at x={x_old:.6g}; c fell below the sweep minimum"
            )

        lag = dx / c
        foot1 = t + sx * lag
        foot3 = t - sx * lag
        A = c * np.interp(foot1, t, v) + np.interp(foot1, t, w) - sx * lag * np.interp(foot1, t, f)
        B = -c * np.interp(foot3, t, v) + np.interp(foot3, t, w) + sx * lag * np.interp(foot3, t, f)
        v_new = (A - B) / (2.0 * c)
        w_new = 0.5 * (A + B)
        u_new = u + 0.5 * sx * dx * (v + v_new)

        U[:, j_new] = np.where(new_valid, u_new, np.nan)
        V[:, j_new] = np.where(new_valid, v_new, np.nan)
        W[:, j_new] = np.where(new_valid, w_new, np.nan)
        mask[:, j_new] = new_valid
        reached = j_new

    if reached != columns[-1]:
        logger.debug("sideways mask emptied after x=%.6g", x[reached])
        if require_traversal:
            raise TraversalError(
                f"determinate domain of the {data.side} traces empties at x={x[reached]:.6g} "
                f"before reaching the far side; window too short"
            )

    out = Field(g, U, V, W, mask, direction="rightward" if sx > 0 else "leftward")
    out.guard = smallness_guard(out, epsilon)
    logger.debug("sideways solve finished in %.3fs", time.perf_counter() - started)
    return out


# ─────────────────────────── time slices ────────────────────────────
def extract_time_slice(f: Field, t_query: float) -> TimeSlice:
    t = f.t
    if t_query < t[0] - LEVEL_TOL or t_query > t[-1] + LEVEL_TOL:
        raise WindowError(f"t={t_query:.6g} outside the field window [{t[0]:.6g}, {t[-1]:.6g}]")
    n = int(np.argmin(np.abs(t - t_query)))
    if abs(t[n] - t_query) <= LEVEL_TOL * max(1.0, abs(t_query)):
        return TimeSlice(float(t[n]), f.x, f.u[n].copy(), f.v[n].copy(), f.w[n].copy(), f.mask[n].copy())
    n = int(np.clip(np.searchsorted(t, t_query) - 1, 0, len(t) - 2))
    theta = (t_query - t[n]) / (t[n + 1] - t[n])
    mask = f.mask[n] & f.mask[n + 1]

    def blend(a):
        out = (1.0 - theta) * a[n] + theta * a[n + 1]
        return np.where(mask, out, np.nan)

    return TimeSlice(float(t_query), f.x, blend(f.u), blend(f.v), blend(f.w), mask)


# ─────────────────────────── convergence ────────────────────────────
def forward_error_ladder(
    p: Problem,
    exact: str,
    g: Grid,
    levels: int = 3,
) -> pd.DataFrame:
    """Sup error of u against a closed form u(t, x) over the whole field, per doubling."""
    u_exact = compile_expression(exact)
    rows: List[Dict[str, Any]] = []
    previous = None
    for level in range(levels):
        field_ = solve_mixed(p, g)
        tt, xx = np.meshgrid(g.t, g.x, indexing="ij")
        ref = np.broadcast_to(u_exact({"t": tt, "x": xx}), tt.shape)
        err = float(np.max(np.abs(field_.u - ref)))
        rows.append({
            "level": level, "nx": g.nx, "nt": g.nt, "dx": g.dx, "dt": g.dt, "error": err,
            "ratio": previous / err if previous and err > 0 else np.nan,
        })
        logger.info("forward ladder level %d (%dx%d): sup error %.3e", level, g.nx, g.nt, err)
        previous = err
        g = g.refined()
    return pd.DataFrame(rows)
