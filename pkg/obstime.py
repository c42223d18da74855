# obstime.py
"""
Observability-time analysis
───────────────────────────
I(t0, T) = ∫_{t0}^{t0+T} min_x c(t, x, 0, 0, 0) dt, compared with
L (two-sided) or 2L (one-sided, either end).

• check_time_condition()          – strict "I > threshold", boundary case flagged critical
• min_observability_time()        – T* by bisection, or NEVER
• classify_initial_times()        – all / some / none over a t0 grid
• autonomous_bound()              – sup_x L / c(x, 0, 0, 0) (× 2 one-sided)
• check_strengthened_condition()  – the ε-neighbourhood version of the condition
• classification_frame()          – t0, T*, status table
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from errors import AutonomyError
from problem import Problem

logger = logging.getLogger(__name__)

T_NODES = 1025
X_NODES = 256
BISECT_TOL = 1e-8
CRITICAL_TOL = 1e-9
AUTONOMY_SAMPLES = 16
AUTONOMY_TOL = 1e-10

NEVER = "never"
MODES = ("two_sided", "one_sided", "one_sided_right")


@dataclass(frozen=True)
class TimeCondition:
    mode: str
    threshold: float
    t0: float
    T: float
    integral_value: float

    @property
    def passed(self) -> bool:
        return self.integral_value > self.threshold + CRITICAL_TOL

    @property
    def critical(self) -> bool:
        return abs(self.integral_value - self.threshold) <= CRITICAL_TOL

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "critical" if self.critical else "fail"


def threshold(p: Problem, mode: str) -> float:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    return p.L if mode == "two_sided" else 2.0 * p.L


def _inf_speed(p: Problem, t: np.ndarray, x_nodes: int = X_NODES) -> np.ndarray:
    x = np.linspace(0.0, p.L, x_nodes)
    tt, xx = np.meshgrid(t, x, indexing="ij")
    return np.min(p.speed(tt, xx), axis=1)


def time_integral(p: Problem, t0: float, T: float, *, t_nodes: int = T_NODES, x_nodes: int = X_NODES) -> float:
    """Composite Simpson on t_nodes points of min over x_nodes of c(t, x, 0, 0, 0)."""
    if T == 0:
        return 0.0
    t = np.linspace(t0, t0 + T, t_nodes)
    return float(integrate.simpson(_inf_speed(p, t, x_nodes), x=t))


def check_time_condition(p: Problem, t0: float, T: float, mode: str = "two_sided") -> TimeCondition:
    if not T > 0:
        raise ValueError(f"observation time must be positive, got T={T}")
    cond = TimeCondition(mode, threshold(p, mode), float(t0), float(T), time_integral(p, t0, T))
    if cond.critical:
        logger.warning(
            "time condition is critical: integral %.12g equals threshold %.6g (t0=%.6g, T=%.6g)",
            cond.integral_value, cond.threshold, t0, T,
        )
    return cond


def min_observability_time(
    p: Problem,
    t0: float,
    mode: str = "two_sided",
    horizon: float = 10.0,
) -> Union[float, str]:
    """Smallest T ≤ horizon with I(t0, T) = threshold, or NEVER."""
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    target = threshold(p, mode)

    def gap(T: float) -> float:
        return time_integral(p, t0, T) - target

    if gap(horizon) <= 0:
        logger.debug("no observability time within horizon %.6g at t0=%.6g", horizon, t0)
        return NEVER
    return float(optimize.bisect(gap, 0.0, horizon, xtol=BISECT_TOL))


@dataclass(frozen=True)
class Classification:
    label: str                                  # all | some | none
    rows: Tuple[Tuple[float, Union[float, str]], ...]

def classify_initial_times(
    p: Problem,
    t0_grid: Sequence[float],
    mode: str = "two_sided",
    horizon: float = 10.0,
) -> Classification:
    t0_grid = [float(t0) for t0 in t0_grid]
    if not t0_grid or not np.all(np.isfinite(t0_grid)):
        raise ValueError("t0 grid must be finite and non-empty")
    rows = tuple((t0, min_observability_time(p, t0, mode, horizon)) for t0 in t0_grid)
    finite = [T != NEVER for _, T in rows]
    label = "all" if all(finite) else "none" if not any(finite) else "some"
    logger.info("initial times classified %r over %d values of t0", label, len(rows))
    return Classification(label, rows)


def classification_frame(c: Classification) -> pd.DataFrame:
    return pd.DataFrame(
        [{"t0": t0, "T_star": np.nan if T == NEVER else T, "status": "never" if T == NEVER else "observable"}
         for t0, T in c.rows]
    )


def autonomous_bound(p: Problem, mode: str = "two_sided", *, t_window: Optional[Tuple[float, float]] = None) -> float:
    """sup over x of threshold / c(x, 0, 0, 0), once c is checked t-independent."""
    t0, t1 = t_window or (p.t0, p.t0 + p.horizon)
    t = np.linspace(t0, t1, AUTONOMY_SAMPLES)
    x = np.linspace(0.0, p.L, X_NODES)
    tt, xx = np.meshgrid(t, x, indexing="ij")
    c = p.speed(tt, xx)
    deviation = float(np.max(np.abs(c - c[0])))
    if deviation > AUTONOMY_TOL:
        raise AutonomyError(f"c depends on t (deviation {deviation:.3e} across {AUTONOMY_SAMPLES} samples)")
    return float(np.max(threshold(p, mode) / c[0]))


# ───────────────────── ε-strengthened condition ─────────────────────
def _sphere_directions() -> np.ndarray:
    d = np.array([(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1) if (i, j, k) != (0, 0, 0)],
                 dtype=float)
    d /= np.linalg.norm(d, axis=1)[:, None]
    return np.vstack([np.zeros((1, 3)), d])


@dataclass(frozen=True)
class StrengthenedCondition:
    mode: str
    epsilon: float
    threshold: float
    integral_value: float

    @property
    def passed(self) -> bool:
        return self.integral_value > self.threshold


def check_strengthened_condition(
    p: Problem,
    t0: float,
    T: float,
    epsilon: float = 0.1,
    mode: str = "two_sided",
    *,
    t_nodes: int = T_NODES,
    x_nodes: int = X_NODES,
) -> StrengthenedCondition:
    """
    ∫ inf over x and over states with |(u, v, w)| ≤ ε of c, against the threshold.
    The state ball is sampled at its centre and along 26 lattice directions.
    """
    t = np.linspace(t0, t0 + T, t_nodes)
    x = np.linspace(0.0, p.L, x_nodes)
    tt, xx = np.meshgrid(t, x, indexing="ij")
    inner = np.full(t.shape, np.inf)
    for u, v, w in epsilon * _sphere_directions():
        inner = np.minimum(inner, np.min(p.speed(tt, xx, u, v, w), axis=1))
    value = float(integrate.simpson(inner, x=t))
    out = StrengthenedCondition(mode, float(epsilon), threshold(p, mode), value)
    logger.debug("strengthened condition (eps=%.3g): %.6g vs %.6g", epsilon, value, out.threshold)
    return out


def condition_summary(p: Problem, t0: float, T: float, mode: str, horizon: float) -> Dict[str, Any]:
    cond = check_time_condition(p, t0, T, mode)
    T_star = min_observability_time(p, t0, mode, horizon)
    return {
        "mode": mode, "t0": t0, "T": T, "threshold": cond.threshold,
        "integral": cond.integral_value, "status": cond.status,
        "T_star": T_star,
    }
