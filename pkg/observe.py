# observe.py
"""
Boundary observations, trace pairs and discrete C^k norms
─────────────────────────────────────────────────────────
  dirichlet → observe u_x (k),   (a, b) = (h, k)
  neumann   → observe u,         (a, b) = (k, h)
  robin     → observe u,         (a, b) = (k, h ± αk)
  dissipative → observe u,       (a, b) = (k, h ± βk')
  (upper sign at x = 0, lower at x = L)

• extract_observation / assemble_trace / to_sideways
• finite_difference / discrete_norm
• observability_ratio / trace_bound_ratio
• forward_observations(p, grid)      – simulate once, observe both ends
• observation_frame / trace_frame    – CSV tables
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import NormError, ObserveError, UnobservableDatum
from hypersolve import Field, Grid, SidewaysData, solve_mixed
from problem import BoundaryCondition, Problem, SampledFunction

logger = logging.getLogger(__name__)

MODES = ("two_sided", "one_sided", "one_sided_right")


@dataclass(frozen=True)
class Observation:
    side: str
    bc_kind: str
    t: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        if len(self.t) != len(self.k):
            raise ObserveError("observation samples and times differ in length")
        if not np.all(np.isfinite(self.k)):
            raise ObserveError(f"non-finite observation on the {self.side} boundary")

    @property
    def d(self) -> int:
        return 1 if self.bc_kind == "dirichlet" else 2

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def window(self) -> Tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def observed(self) -> str:
        return "u_x" if self.bc_kind == "dirichlet" else "u"

    def restrict(self, t0: float, t1: float) -> "Observation":
        keep = (self.t >= t0 - 1e-12) & (self.t <= t1 + 1e-12)
        return Observation(self.side, self.bc_kind, self.t[keep], self.k[keep])


@dataclass(frozen=True)
class TracePair:
    side: str
    t: np.ndarray
    a: np.ndarray       # u on the boundary
    b: np.ndarray       # u_x on the boundary
    a_t: Optional[np.ndarray] = None

    @property
    def window(self) -> Tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def to_sideways(self) -> SidewaysData:
        return SidewaysData(self.side, self.t, self.a, self.b, self.a_t)

    def dirichlet_data(self) -> SampledFunction:
        """The trace a(t) as boundary data for a backward mixed solve."""
        slope = self.a_t if self.a_t is not None else finite_difference(self.a, self.t[1] - self.t[0], 1)
        return SampledFunction(self.t, self.a, slope, label=f"a_{self.side}")


# ─────────────────────── differences and norms ───────────────────────
def finite_difference(samples, step: float, order: int = 1) -> np.ndarray:
    """Central differences inside, second-order one-sided differences at the ends."""
    y = np.asarray(samples, dtype=float)
    if order == 0:
        return y.copy()
    if order == 1:
        if y.size < 3:
            if y.size == 2:
                return np.full(2, (y[1] - y[0]) / step)
            raise NormError("first difference needs at least 2 samples")
        return np.gradient(y, step, edge_order=2)
    if order == 2:
        if y.size < 3:
            raise NormError("second difference needs at least 3 samples")
        out = np.empty_like(y)
        out[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / step**2
        if y.size >= 4:
            out[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / step**2
            out[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / step**2
        else:
            out[0] = out[-1] = out[1]
        return out
    raise NormError(f"unsupported difference order {order}")


def discrete_norm(samples, order: int, step: float) -> float:
    """max over j ≤ order of sup |D^j samples|."""
    y = np.asarray(samples, dtype=float)
    if order not in (0, 1, 2):
        raise NormError(f"norm order must be 0, 1 or 2, got {order}")
    if y.size < order + 1:
        raise NormError(f"C^{order} norm needs at least {order + 1} samples, got {y.size}")
    if y.size == 0:
        raise NormError("empty sample")
    return max(float(np.max(np.abs(finite_difference(y, step, j)))) for j in range(order + 1))


# ───────────────────────── observation menu ─────────────────────────
def extract_observation(f: Field, bc: BoundaryCondition) -> Observation:
    j = 0 if bc.side == "left" else f.grid.nx
    values = f.v[:, j] if bc.kind == "dirichlet" else f.u[:, j]
    return Observation(bc.side, bc.kind, f.t.copy(), values.copy())


def assemble_trace(obs: Observation, bc: BoundaryCondition) -> TracePair:
    """(u, u_x) on the boundary from the observed value and the known condition."""
    if obs.side != bc.side or obs.bc_kind != bc.kind:
        raise ObserveError(
            f"observation ({obs.side}, {obs.bc_kind}) does not match boundary condition ({bc.side}, {bc.kind})"
        )
    h = bc.h(obs.t)
    k = obs.k
    if bc.kind == "dirichlet":
        return TracePair(obs.side, obs.t, h, k.copy(), bc.h.derivative(obs.t))
    k_t = finite_difference(k, obs.dt, 1)
    if bc.kind == "neumann":
        b = h
    elif bc.kind == "robin":
        b = h - bc.sign * bc.alpha * k
    else:
        b = h - bc.sign * bc.beta * k_t
    return TracePair(obs.side, obs.t, k.copy(), np.asarray(b, dtype=float), k_t)


def _h_norm(bc: BoundaryCondition, t: np.ndarray) -> float:
    return discrete_norm(bc.h(t), bc.l, float(t[1] - t[0]))


def _obs_norm(obs: Observation) -> float:
    return discrete_norm(obs.k, obs.d, obs.dt)


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        if numerator == 0.0:
            return 0.0
        raise UnobservableDatum(
            f"nonzero datum (norm {numerator:.3e}) with vanishing observations and boundary data"
        )
    return numerator / denominator


def _selected(observations: Sequence[Observation], mode: str) -> List[Observation]:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    by_side = {o.side: o for o in observations}
    wanted = {"two_sided": ("left", "right"), "one_sided": ("left",), "one_sided_right": ("right",)}[mode]
    missing = [s for s in wanted if s not in by_side]
    if missing:
        raise ObserveError(f"{mode} ratio needs observations at {missing}")
    return [by_side[s] for s in wanted]


def data_norm(phi, psi, dx: float) -> float:
    """‖(φ, ψ)‖ in C² × C¹ (sum of the component norms)."""
    return discrete_norm(phi, 2, dx) + discrete_norm(psi, 1, dx)


def observability_ratio(
    p: Problem,
    data: Tuple[np.ndarray, np.ndarray],
    observations: Sequence[Observation],
    mode: str = "two_sided",
    *,
    dx: Optional[float] = None,
) -> float:
    """
    ‖(φ, ψ)‖_{C²×C¹} / (‖k‖_{C^d} [+ ‖k̄‖_{C^d̄}] + ‖h‖_{C^l} + ‖h̄‖_{C^l̄}).

    `data` holds (φ, ψ) sampled on a uniform grid of [0, L]; the one-sided
    modes drop the unobserved end's k but keep both boundary functions.
    """
    phi, psi = (np.asarray(a, dtype=float) for a in data)
    dx = dx if dx is not None else p.L / (phi.size - 1)
    chosen = _selected(observations, mode)
    t = chosen[0].t
    numerator = data_norm(phi, psi, dx)
    denominator = sum(_obs_norm(o) for o in chosen) + _h_norm(p.bc_left, t) + _h_norm(p.bc_right, t)
    return _ratio(numerator, denominator)


def trace_bound_ratio(trace: TracePair, obs: Observation, bc: BoundaryCondition) -> float:
    """‖(a, b)‖_{C²×C¹} / (‖k‖_{C^d} + ‖h‖_{C^l}) on one boundary."""
    dt = float(trace.t[1] - trace.t[0])
    numerator = discrete_norm(trace.a, 2, dt) + discrete_norm(trace.b, 1, dt)
    return _ratio(numerator, _obs_norm(obs) + _h_norm(bc, obs.t))


def forward_observations(p: Problem, grid: Grid) -> Tuple[Field, Observation, Observation]:
    field = solve_mixed(p, grid)
    left = extract_observation(field, p.bc_left)
    right = extract_observation(field, p.bc_right)
    logger.debug("observed %s at x=0 and %s at x=L on %d samples", left.observed, right.observed, len(left.t))
    return field, left, right


# ─────────────────────────────── CSV ────────────────────────────────
def observation_frame(observations: Iterable[Observation]) -> pd.DataFrame:
    observations = list(observations)
    out = pd.DataFrame({"t": observations[0].t})
    for o in observations:
        out[f"k_{o.side}"] = o.k
    return out


def trace_frame(traces: Iterable[TracePair]) -> pd.DataFrame:
    traces = list(traces)
    out = pd.DataFrame({"t": traces[0].t})
    for tr in traces:
        out[f"a_{tr.side}"] = tr.a
        out[f"b_{tr.side}"] = tr.b
    return out


def norms_frame(p: Problem, observations: Iterable[Observation]) -> pd.DataFrame:
    rows = []
    for o in observations:
        bc = p.boundary(o.side)
        trace = assemble_trace(o, bc)
        rows.append({
            "side": o.side, "kind": o.bc_kind, "observed": o.observed, "d": o.d, "l": bc.l,
            "k_norm": _obs_norm(o), "h_norm": _h_norm(bc, o.t),
            "trace_ratio": trace_bound_ratio(trace, o, bc),
        })
    return pd.DataFrame(rows)
