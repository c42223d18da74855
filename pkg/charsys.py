# charsys.py
"""
First-order reduction and characteristic form
─────────────────────────────────────────────
• State / CharState            – (u, u_x, u_t) and (v1, v2, v3) = (cv + w, u, −cv + w)
• eigenvalues()                – (−c, 0, c)
• to_characteristic()          – State → CharState
• from_characteristic()        – CharState → State (damped fixed point in v)
• invert_velocity()            – vectorised v = (v1 − v3) / 2c(…, v, …)
• boundary_resolve()           – fill the incoming variable from the boundary relation
• boundary_state()             – same, returned as a State
• check_degeneracy()           – dissipative β = 1/c exclusion over a window
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from errors import ConvergenceError, DegeneracyError, SpeedError
from problem import BoundaryCondition, Problem

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
FIXED_POINT_TOL = 1e-14
MAX_FIXED_POINT_ITER = 50
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class State:
    u: float
    v: float
    w: float

    def __post_init__(self):
        if not all(np.isfinite((self.u, self.v, self.w))):
            raise ValueError(f"non-finite state {self}")

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.u, self.v, self.w


@dataclass(frozen=True)
class CharState:
    """v2 is always u. At a boundary node one of v1/v3 may still be unknown (None)."""

    v1: Optional[float]
    v2: float
    v3: Optional[float]

    @property
    def complete(self) -> bool:
        return self.v1 is not None and self.v3 is not None

    @property
    def w(self) -> float:
        return 0.5 * (self.v1 + self.v3)


def _speed(p: Problem, t, x, u, v, w) -> float:
    c = p.speed(t, x, u, v, w)
    if not c > 0:
        raise SpeedError(f"propagation speed c={c:.6g} is not positive at (t, x) = ({t:.6g}, {x:.6g})")
    return float(c)


def eigenvalues(p: Problem, t: float, x: float, s: State) -> Tuple[float, float, float]:
    c = _speed(p, t, x, *s.as_tuple())
    return -c, 0.0, c


def to_characteristic(p: Problem, t: float, x: float, s: State) -> CharState:
    c = float(p.speed(t, x, s.u, s.v, s.w))
    return CharState(c * s.v + s.w, s.u, -c * s.v + s.w)


def invert_velocity(
    p: Problem,
    t,
    x,
    u,
    diff,
    w,
    *,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = MAX_FIXED_POINT_ITER,
):
    """
    Solve v = diff / (2 c(t, x, u, v, w)) for v, elementwise.

    One step is exact when c does not depend on v. Otherwise a fixed-point
    iteration whose step is halved whenever the residual grows.
    """
    diff = np.asarray(diff, dtype=float)

    def image(v):
        c = p.speed(t, x, u, v, w)
        if np.any(~(np.asarray(c) > 0)):
            raise SpeedError("propagation speed is not positive while inverting the characteristic transform")
        return diff / (2.0 * c)

    v = image(np.zeros_like(diff))
    if "v" not in p.c.variables:
        return v

    damping = 1.0
    residual = np.max(np.abs(image(v) - v), initial=0.0)
    for _ in range(max_iter):
        if residual <= tol * (1.0 + np.max(np.abs(v), initial=0.0)):
            return v
        candidate = v + damping * (image(v) - v)
        new_residual = np.max(np.abs(image(candidate) - candidate), initial=0.0)
        if new_residual > residual:
            damping *= 0.5
            continue
        v, residual = candidate, new_residual
    if residual <= tol * (1.0 + np.max(np.abs(v), initial=0.0)):
        return v
    raise ConvergenceError(
        f"characteristic inversion did not converge in {max_iter} iterations "
        f"(residual {residual:.3e}); data has left the small-data regime"
    )


def from_characteristic(p: Problem, t: float, x: float, cs: CharState) -> State:
    u = cs.v2
    w = 0.5 * (cs.v1 + cs.v3)
    v = invert_velocity(p, t, x, u, cs.v1 - cs.v3, w)
    _speed(p, t, x, u, float(v), w)
    return State(u, float(v), w)


# ──────────────────────── boundary resolution ───────────────────────
def _boundary_x(p: Problem, bc: BoundaryCondition) -> float:
    return 0.0 if bc.side == "left" else p.L


def _degenerate(p: Problem, bc: BoundaryCondition, t: float, knows_v1: bool) -> bool:
    # left side with v3 known, or right side with v1 known
    if bc.kind != "dissipative" or knows_v1 != (bc.side == "right"):
        return False
    c0 = float(p.speed(t, _boundary_x(p, bc)))
    return abs(bc.beta - 1.0 / c0) < DEGENERACY_TOL


def boundary_resolve(
    p: Problem,
    bc: BoundaryCondition,
    t: float,
    outgoing: CharState,
    h_val: float,
    h_deriv: float,
    *,
    speed: Optional[float] = None,
    tol: float = NEWTON_TOL,
) -> CharState:
    """
    Complete the CharState at a boundary node.

    `outgoing` carries u (v2) and exactly one of v1 / v3, the variable that
    arrives from the interior. `speed`, when given, freezes c (the solver
    passes the node's previous-level speed); otherwise c is evaluated at
    the resolved state and the relation is solved by secant iteration.
    """
    if (outgoing.v1 is None) == (outgoing.v3 is None):
        raise ValueError("exactly one of v1, v3 must be known at a boundary node")
    knows_v1 = outgoing.v1 is not None
    sigma = 1.0 if knows_v1 else -1.0
    known = outgoing.v1 if knows_v1 else outgoing.v3
    xb = _boundary_x(p, bc)

    if bc.kind == "dirichlet":
        incoming = 2.0 * h_deriv - known
        v1, v3 = (known, incoming) if knows_v1 else (incoming, known)
        return CharState(v1, float(h_val), v3)

    if _degenerate(p, bc, t, knows_v1):
        raise DegeneracyError(
            f"dissipative coefficient beta={bc.beta:.6g} equals 1/c at the {bc.side} boundary "
            f"(t={t:.6g}); the boundary relation cannot be solved for the incoming variable"
        )

    u = float(outgoing.v2)

    def velocity(w):
        return bc.velocity(u, w, h_val)

    def residual(w, c):
        return sigma * c * velocity(w) + w - known

    # every relation is affine in w: v = a0 + a1·w
    a0 = velocity(0.0)
    a1 = velocity(1.0) - a0
    c = speed if speed is not None else _speed(p, t, xb, u, a0, 0.0)
    slope = 1.0 + sigma * c * a1
    if slope == 0.0:
        raise DegeneracyError(f"{bc.kind} relation is degenerate at the {bc.side} boundary (t={t:.6g})")
    w = (known - sigma * c * a0) / slope

    if speed is None and p.c.variables & {"u", "v", "w"}:
        def g(z):
            return residual(z, _speed(p, t, xb, u, velocity(z), z))

        if abs(g(w)) > tol:
            try:
                w = float(optimize.newton(g, w, tol=tol, maxiter=50))
            except RuntimeError as e:
                raise ConvergenceError(f"boundary relation at the {bc.side} side did not converge: {e}") from None
        c = _speed(p, t, xb, u, velocity(w), w)
        if abs(residual(w, c)) > 100 * tol * (1.0 + abs(known)):
            raise ConvergenceError(
                f"boundary relation at the {bc.side} side left residual {residual(w, c):.3e}"
            )

    v = velocity(w)
    return CharState(c * v + w, u, -c * v + w)


def boundary_state(
    p: Problem,
    bc: BoundaryCondition,
    t: float,
    outgoing: CharState,
    h_val: float,
    h_deriv: float,
    *,
    speed: Optional[float] = None,
    tol: float = NEWTON_TOL,
) -> State:
    cs = boundary_resolve(p, bc, t, outgoing, h_val, h_deriv, speed=speed, tol=tol)
    xb = _boundary_x(p, bc)
    if speed is None:
        return from_characteristic(p, t, xb, cs)
    return State(cs.v2, (cs.v1 - cs.v3) / (2.0 * speed), 0.5 * (cs.v1 + cs.v3))


def check_degeneracy(p: Problem, bc: BoundaryCondition, t_grid) -> None:
    """
    Reject a dissipative condition whose β meets 1/c(t, x_b, 0, 0, 0) on the window:
    a near-zero gap at a sample, or a sign change between samples.
    """
    if bc.kind != "dissipative":
        return
    t_grid = np.asarray(t_grid, dtype=float)
    c0 = np.asarray(p.speed(t_grid, _boundary_x(p, bc)), dtype=float)
    gap = bc.beta - 1.0 / c0
    i = int(np.argmin(np.abs(gap)))
    crosses = np.any(np.sign(gap[1:]) * np.sign(gap[:-1]) < 0)
    if abs(gap[i]) < DEGENERACY_TOL or crosses:
        raise DegeneracyError(
            f"dissipative coefficient beta={bc.beta:.6g} meets 1/c(t, x, 0, 0, 0) at the "
            f"{bc.side} boundary near t={t_grid[i]:.6g}"
        )
    logger.debug("%s dissipative boundary clear of degeneracy (min gap %.3e)", bc.side, abs(gap[i]))
