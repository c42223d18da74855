# domains.py
"""
Characteristic boundary curves and maximum determinate domains
──────────────────────────────────────────────────────────────
  x1: from (t0+T, 0) backward in t, dx/dt = −c      ┐ bound D_r (x ≤ min(x1, x2))
  x2: from (t0,   0) forward  in t, dx/dt = +c      ┘
  x3: from (t0+T, L) backward in t, dx/dt = +c      ┐ bound D_l (x ≥ max(x3, x4))
  x4: from (t0,   L) forward  in t, dx/dt = −c      ┘

• trace_curve(p, field, label)   – RK4 on the field's interpolated state
• build_domain(curves, side)     – envelope of the side's two curves
• find_Ttilde(dr, dl, mode)      – intermediate time where the domains meet / traverse
• curves_frame(curves)           – (t, x1 … x4) table for CSV export
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from charsys import State
from errors import DomainIntersectionError, DomainMismatchError, MaskError
from hypersolve import Field
from problem import Problem

logger = logging.getLogger(__name__)

# label → (start at window end?, start at x = L?, sign of dx/dt)
CURVES: Dict[str, Tuple[bool, bool, float]] = {
    "x1": (True, False, -1.0),
    "x2": (False, False, 1.0),
    "x3": (True, True, 1.0),
    "x4": (False, True, -1.0),
}
SIDE_CURVES = {"right": ("x1", "x2"), "left": ("x3", "x4")}


@dataclass(frozen=True)
class Curve:
    label: str
    t: np.ndarray           # ascending grid levels
    x: np.ndarray           # clipped to [0, L] after exit
    start: Tuple[float, float]
    exit_t: Optional[float] = None

    @property
    def window(self) -> Tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def at(self, t):
        return np.interp(t, self.t, self.x)

    def slopes(self) -> np.ndarray:
        return np.diff(self.x) / np.diff(self.t)


@dataclass(frozen=True)
class DeterminateDomain:
    side: str               # right → D_r, left → D_l
    lower: Curve
    upper: Curve
    window: Tuple[float, float]
    L: float

    @property
    def t(self) -> np.ndarray:
        return self.lower.t

    def envelope(self, t=None) -> np.ndarray:
        t = self.t if t is None else t
        if self.side == "right":
            return np.minimum(self.lower.at(t), self.upper.at(t))
        return np.maximum(self.lower.at(t), self.upper.at(t))

    def contains(self, t, x) -> np.ndarray:
        edge = self.envelope(t)
        return x <= edge if self.side == "right" else x >= edge

    @property
    def empty(self) -> bool:
        if self.window[1] - self.window[0] <= 0:
            return True
        edge = self.envelope()
        if self.side == "right":
            return not np.any(edge > 0)
        return not np.any(edge < self.L)


@dataclass(frozen=True)
class Overlap:
    mode: str
    S: Tuple[float, float]          # longest run of admissible levels
    T_tilde: float
    interval: Tuple[float, float]   # x-range shared at T̃ (two-sided) or [0, L]
    levels: int


# ───────────────────────────── tracing ──────────────────────────────
def state_at(f: Field, t: float, x: float) -> State:
    """Bilinear state lookup; x is clamped to each row's masked range."""
    grid = f.grid
    s = (t - grid.t0) / grid.dt
    n = int(np.clip(np.floor(s), 0, grid.nt - 1))
    theta = float(np.clip(s - n, 0.0, 1.0))
    rows = []
    for k in (n, n + 1):
        rng = f.row_range(k)
        if rng is None:
            rows.append(None)
            continue
        m = f.mask[k]
        xc = float(np.clip(x, *rng))
        rows.append(tuple(float(np.interp(xc, f.x[m], a[k][m])) for a in (f.u, f.v, f.w)))
    if rows[0] is None and rows[1] is None:
        raise MaskError(f"state lookup at (t, x) = ({t:.6g}, {x:.6g}) outside the field mask")
    if rows[0] is None or theta == 1.0 and rows[1] is not None:
        return State(*rows[1])
    if rows[1] is None or theta == 0.0:
        return State(*rows[0])
    return State(*((1.0 - theta) * a + theta * b for a, b in zip(rows[0], rows[1])))


def trace_curve(p: Problem, f: Field, label: str) -> Curve:
    """Classical RK4 with step f.grid.dt, clipped where the curve leaves [0, L]."""
    if label not in CURVES:
        raise ValueError(f"unknown curve {label!r}")
    from_end, from_right, sign = CURVES[label]
    t = f.t
    L = p.L
    dt = f.grid.dt

    def rate(tk: float, xk: float) -> float:
        xc = min(max(xk, 0.0), L)
        s = state_at(f, tk, xc)
        return sign * float(p.speed(tk, xc, s.u, s.v, s.w))

    order = np.arange(len(t))[::-1] if from_end else np.arange(len(t))
    h = -dt if from_end else dt
    xs = np.empty(len(t))
    x0 = L if from_right else 0.0
    xs[order[0]] = x0
    fill = 0.0 if from_right else L
    exit_t = None
    xk = x0
    for i, (a, b) in enumerate(zip(order[:-1], order[1:])):
        tk = t[a]
        k1 = rate(tk, xk)
        k2 = rate(tk + h / 2, xk + h / 2 * k1)
        k3 = rate(tk + h / 2, xk + h / 2 * k2)
        k4 = rate(tk + h, xk + h * k3)
        x_next = xk + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not 0.0 <= x_next <= L:
            frac = (fill - xk) / (x_next - xk)
            exit_t = float(tk + frac * h)
            xs[order[i + 1:]] = fill
            break
        xs[b] = x_next
        xk = x_next
    return Curve(label, t.copy(), xs, (float(t[order[0]]), x0), exit_t)


def trace_curves(p: Problem, f: Field, labels: Iterable[str]) -> Dict[str, Curve]:
    return {label: trace_curve(p, f, label) for label in labels}


# ───────────────────────────── domains ──────────────────────────────
def build_domain(curves: Sequence[Curve], side: str, L: float = 1.0) -> DeterminateDomain:
    if side not in SIDE_CURVES:
        raise ValueError(f"unknown side {side!r}")
    by_label = {c.label: c for c in curves}
    wanted = SIDE_CURVES[side]
    missing = [lbl for lbl in wanted if lbl not in by_label]
    if missing:
        raise DomainMismatchError(f"domain {side} needs curves {wanted}, missing {missing}")
    lower, upper = by_label[wanted[0]], by_label[wanted[1]]
    if lower.t.shape != upper.t.shape or not np.allclose(lower.t, upper.t, rtol=0.0, atol=1e-12):
        raise DomainMismatchError(f"curves {wanted} were traced on different windows")
    d = DeterminateDomain(side, lower, upper, lower.window, L)
    if d.empty:
        logger.warning("determinate domain %s has an empty interior", side)
    return d


def _longest_run(flags: np.ndarray) -> Optional[Tuple[int, int]]:
    best, start = None, None
    for i, ok in enumerate(np.append(flags, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if best is None or i - start > best[1] - best[0] + 1:
                best = (start, i - 1)
            start = None
    return best


def find_Ttilde(
    dr: Optional[DeterminateDomain],
    dl: Optional[DeterminateDomain] = None,
    mode: str = "two_sided",
    *,
    tol: float = 1e-9,
) -> Tuple[float, Overlap]:
    """
    Scan grid levels for the set S where the domains cover {t} × [0, L].

    two_sided:        min(x1, x2) > max(x3, x4)
    one_sided:        min(x1, x2) ≥ L
    one_sided_right:  max(x3, x4) ≤ 0
    T̃ is the level nearest the midpoint of the longest run of S.
    """
    if mode == "two_sided":
        if dr is None or dl is None:
            raise DomainMismatchError("two-sided mode needs both D_r and D_l")
        if dr.t.shape != dl.t.shape or not np.allclose(dr.t, dl.t, rtol=0.0, atol=1e-12):
            raise DomainMismatchError("D_r and D_l were built on different windows")
        t, L = dr.t, dr.L
        right, left = dr.envelope(), dl.envelope()
        flags = right > left
    elif mode == "one_sided":
        if dr is None:
            raise DomainMismatchError("one-sided mode needs D_r")
        t, L = dr.t, dr.L
        right = dr.envelope()
        flags = right >= L - tol * L
    elif mode == "one_sided_right":
        if dl is None:
            raise DomainMismatchError("one-sided-right mode needs D_l")
        t, L = dl.t, dl.L
        left = dl.envelope()
        flags = left <= tol * L
    else:
        raise ValueError(f"unknown mode {mode!r}")

    run = _longest_run(flags)
    if run is None:
        what = "do not intersect" if mode == "two_sided" else "do not traverse [0, L]"
        raise DomainIntersectionError(
            f"determinate domains {what} on the window [{t[0]:.6g}, {t[-1]:.6g}]"
        )
    i0, i1 = run
    mid = 0.5 * (t[i0] + t[i1])
    n = i0 + int(np.argmin(np.abs(t[i0:i1 + 1] - mid)))
    if mode == "two_sided":
        interval = (float(left[n]), float(right[n]))
    else:
        interval = (0.0, float(L))
    overlap = Overlap(mode, (float(t[i0]), float(t[i1])), float(t[n]), interval, i1 - i0 + 1)
    logger.debug("T_tilde=%.6g from S=[%.6g, %.6g] (%s)", overlap.T_tilde, t[i0], t[i1], mode)
    return overlap.T_tilde, overlap


def curves_frame(curves: Iterable[Curve]) -> pd.DataFrame:
    curves = list(curves)
    if not curves:
        return pd.DataFrame({"t": []})
    out = pd.DataFrame({"t": curves[0].t})
    for c in curves:
        out[c.label] = c.x
    return out
