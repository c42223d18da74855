# problem.py
"""
Problem model for u_tt − c²(t,x,u,u_x,u_t) u_xx = f(t,x,u,u_x,u_t) on [0, L]
──────────────────────────────────────────────────────────────────────────────
• BoundaryCondition      – dirichlet | neumann | robin | dissipative, per side
• Problem                – coefficients, interval, initial window, data
• make_problem(config)   – build + validate the standing hypotheses
• check_compatibility()  – corner residuals at (t0, 0) and (t0, L)
• reduce_spherical()     – radial reduction of the n-D rotation-invariant case
• catalog(name)          – named instances
• mirror(p)              – the x ↦ L − x reflection of an instance
• smallness_guard()      – measured C¹ size of a computed solution vs ε
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from errors import (
    ConfigError,
    HypothesisViolation,
    SphericalGeometryError,
    UnboundVariableError,
    UnknownProblemError,
)
from expr import BinOp, CompiledExpression, Neg, Num, Var, compile_expression, parse, pretty, substitute

logger = logging.getLogger(__name__)

BC_KINDS = ("dirichlet", "neumann", "robin", "dissipative")
SIDES = ("left", "right")
COEFFICIENT_VARS = frozenset({"t", "x", "u", "v", "w"})

VALIDATION_LATTICE = 64
F_ZERO_TOL = 1e-12
FD_STEP = 1e-5
COMPAT_TOL = 1e-6
EPSILON = 0.1


# ───────────────────────── scalar functions ─────────────────────────
class ExprFunction:
    """One-variable view of an expression (h(t), φ(x), ψ(x)) that broadcasts."""

    def __init__(self, expr: Union[str, CompiledExpression], arg: str):
        self.expr = compile_expression(expr) if isinstance(expr, str) else expr
        self.arg = arg
        extra = self.expr.variables - {arg}
        if extra:
            raise UnboundVariableError(sorted(extra)[0])

    @property
    def source(self) -> str:
        return self.expr.source

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(self.expr({self.arg: s}), s.shape).astype(float)

    def derivative(self, s, order: int = 1, step: float = FD_STEP):
        return central_difference(self, s, order, step)


class SampledFunction:
    """Uniformly sampled function of one variable, linear interpolation between samples."""

    def __init__(self, nodes, values, derivative_values=None, label: str = "sampled"):
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.derivative_values = (
            None if derivative_values is None else np.asarray(derivative_values, dtype=float)
        )
        self.source = f"<{label}>"

    def __call__(self, s):
        return np.interp(np.asarray(s, dtype=float), self.nodes, self.values)

    def derivative(self, s, order: int = 1, step: float = FD_STEP):
        if order == 1 and self.derivative_values is not None:
            return np.interp(np.asarray(s, dtype=float), self.nodes, self.derivative_values)
        return central_difference(self, s, order, step)


def central_difference(fn, s, order: int = 1, step: float = FD_STEP):
    s = np.asarray(s, dtype=float)
    if order == 0:
        return fn(s)
    if order == 1:
        return (fn(s + step) - fn(s - step)) / (2.0 * step)
    if order == 2:
        return (fn(s + step) - 2.0 * fn(s) + fn(s - step)) / (step * step)
    raise ValueError(f"unsupported derivative order {order}")


# ─────────────────────────── boundary data ───────────────────────────
@dataclass(frozen=True)
class BoundaryCondition:
    """
    x=0:  u=h | u_x=h | u_x − αu=h | u_x − βu_t=h
    x=L:  u=h̄ | u_x=h̄ | u_x + ᾱu=h̄ | u_x + β̄u_t=h̄
    """

    kind: str
    side: str
    h: Any                      # ExprFunction | SampledFunction
    alpha: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ConfigError(f"unknown boundary kind {self.kind!r}", module="problem")
        if self.side not in SIDES:
            raise ConfigError(f"unknown boundary side {self.side!r}", module="problem")
        if (self.alpha is not None) != (self.kind == "robin"):
            raise ConfigError("alpha must be given exactly for robin conditions", module="problem")
        if (self.beta is not None) != (self.kind == "dissipative"):
            raise ConfigError("beta must be given exactly for dissipative conditions", module="problem")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}", module="problem")

    @property
    def sign(self) -> float:
        return -1.0 if self.side == "left" else 1.0

    @property
    def x_index(self) -> int:
        return 0 if self.side == "left" else -1

    @property
    def l(self) -> int:
        return 2 if self.kind == "dirichlet" else 1

    @property
    def d(self) -> int:
        return 1 if self.kind == "dirichlet" else 2

    def velocity(self, u, w, h_val):
        """u_x forced by the relation (not defined for dirichlet)."""
        if self.kind == "neumann":
            return h_val + 0.0 * u
        if self.kind == "robin":
            return h_val - self.sign * self.alpha * u
        if self.kind == "dissipative":
            return h_val - self.sign * self.beta * w
        raise ValueError("dirichlet conditions do not fix u_x")

    def residual(self, t, u, v, w):
        """Physical relation minus the boundary function; zero when satisfied."""
        h_val = self.h(t)
        if self.kind == "dirichlet":
            return u - h_val
        if self.kind == "neumann":
            return v - h_val
        if self.kind == "robin":
            return v + self.sign * self.alpha * u - h_val
        return v + self.sign * self.beta * w - h_val

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind, "h": self.h.source}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.beta is not None:
            out["beta"] = self.beta
        return out


def dirichlet(side: str, h) -> BoundaryCondition:
    return BoundaryCondition("dirichlet", side, h)


@dataclass(frozen=True)
class SmallnessGuard:
    epsilon: float
    c1_bound: float

    @property
    def passed(self) -> bool:
        return self.c1_bound <= self.epsilon


def smallness_guard(solution, epsilon: float = EPSILON) -> SmallnessGuard:
    """Discrete C¹ size of a computed solution (anything with u, v, w, mask)."""
    mask = solution.mask
    bound = 0.0
    for comp in (solution.u, solution.v, solution.w):
        if mask.any():
            bound = max(bound, float(np.max(np.abs(comp[mask]))))
    guard = SmallnessGuard(epsilon, bound)
    if not guard.passed:
        logger.warning("smallness guard breached: C1 norm %.4g > epsilon %.4g", bound, epsilon)
    return guard


# ───────────────────────────── problem ──────────────────────────────
@dataclass(frozen=True)
class Problem:
    c: CompiledExpression
    f: CompiledExpression
    L: float
    t0: float
    bc_left: BoundaryCondition
    bc_right: BoundaryCondition
    phi: Any
    psi: Any
    horizon: float = 4.0
    name: str = "custom"
    meta: Dict[str, Any] = field(default_factory=dict, compare=False)

    def speed(self, t, x, u=0.0, v=0.0, w=0.0):
        return _broadcast(self.c, t, x, u, v, w)

    def source(self, t, x, u=0.0, v=0.0, w=0.0):
        return _broadcast(self.f, t, x, u, v, w)

    def initial_state(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return self.phi(x), self.phi.derivative(x), self.psi(x)

    def boundary(self, side: str) -> BoundaryCondition:
        return self.bc_left if side == "left" else self.bc_right

    def with_data(self, phi, psi) -> "Problem":
        return replace(self, phi=_as_function(phi, "x"), psi=_as_function(psi, "x"))

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "c": self.c.source,
            "f": self.f.source,
            "L": self.L,
            "t0": self.t0,
            "horizon": self.horizon,
            "phi": self.phi.source,
            "psi": self.psi.source,
            "bc_left": self.bc_left.describe(),
            "bc_right": self.bc_right.describe(),
        }


def _broadcast(expr: CompiledExpression, t, x, u, v, w):
    env = {"t": t, "x": x, "u": u, "v": v, "w": w}
    out = expr(env)
    shape = np.broadcast(*[np.asarray(a) for a in env.values()]).shape
    if shape == ():
        return float(out)
    return np.broadcast_to(out, shape).astype(float)


def _as_function(source, arg: str):
    if isinstance(source, (ExprFunction, SampledFunction)):
        return source
    return ExprFunction(str(source), arg)


def _coefficient(source: str, label: str) -> CompiledExpression:
    compiled = compile_expression(str(source))
    extra = compiled.variables - COEFFICIENT_VARS
    if extra:
        raise UnboundVariableError(sorted(extra)[0])
    return compiled


def make_boundary(side: str, entry: Mapping[str, Any]) -> BoundaryCondition:
    unknown = set(entry) - {"kind", "h", "alpha", "beta"}
    if unknown:
        raise ConfigError(f"unknown keys in bc_{side}: {sorted(unknown)}", module="problem")
    kind = str(entry.get("kind", "dirichlet")).lower()
    alpha = entry.get("alpha")
    beta = entry.get("beta")
    return BoundaryCondition(
        kind=kind,
        side=side,
        h=_as_function(entry.get("h", "0"), "t"),
        alpha=None if alpha is None else float(alpha),
        beta=None if beta is None else float(beta),
    )


# ───────────────────────────── catalog ──────────────────────────────
_ZERO_DIRICHLET = {"kind": "dirichlet", "h": "0"}

CATALOG: Dict[str, Dict[str, Any]] = {
    "linear-unit": {"c": "1", "f": "0"},
    "nonauto-sin": {"c": "2 + sin(t)", "f": "0"},
    "nonauto-decay": {"c": "exp(-t)", "f": "0"},
    "quasilinear-small": {"c": "1 + 0.1*u", "f": "0", "phi": "0.02*sin(pi*x)"},
    "autonomous-variable": {"c": "1 + x*(1 - x)", "f": "0"},
}

DEFAULTS: Dict[str, Any] = {
    "L": 1.0,
    "t0": 0.0,
    "horizon": 4.0,
    "phi": "0.05*sin(pi*x)",
    "psi": "0",
    "bc_left": _ZERO_DIRICHLET,
    "bc_right": _ZERO_DIRICHLET,
}

PROBLEM_KEYS = frozenset({"catalog", "name", "c", "f", "L", "t0", "horizon", "phi", "psi", "bc_left", "bc_right"})


def make_problem(config: Mapping[str, Any], *, validate: bool = True) -> Problem:
    """
    Build a Problem from a parsed `problem` config section.
    `{"catalog": name, ...}` starts from a registry entry and applies overrides.
    """
    unknown = set(config) - PROBLEM_KEYS
    if unknown:
        raise ConfigError(f"unknown problem keys: {sorted(unknown)}", module="problem")

    merged: Dict[str, Any] = dict(DEFAULTS)
    name = str(config.get("name", "custom"))
    if "catalog" in config:
        entry = config["catalog"]
        if entry not in CATALOG:
            raise UnknownProblemError(f"unknown catalog problem {entry!r}")
        merged.update(CATALOG[entry])
        name = str(config.get("name", entry))
    merged.update({k: v for k, v in config.items() if k not in ("catalog", "name")})
    for key in ("c", "f"):
        if key not in merged:
            raise ConfigError(f"problem is missing {key!r}", module="problem")

    L = float(merged["L"])
    t0 = float(merged["t0"])
    horizon = float(merged["horizon"])
    if not np.isfinite(L) or not np.isfinite(t0):
        raise ConfigError("L and t0 must be finite", module="problem")
    if L <= 0:
        raise HypothesisViolation(f"interval length must be positive, got L={L}")
    if not horizon > 0:
        raise ConfigError("horizon must be positive", module="problem")

    p = Problem(
        c=_coefficient(merged["c"], "c"),
        f=_coefficient(merged["f"], "f"),
        L=L,
        t0=t0,
        bc_left=make_boundary("left", merged["bc_left"]),
        bc_right=make_boundary("right", merged["bc_right"]),
        phi=_as_function(merged["phi"], "x"),
        psi=_as_function(merged["psi"], "x"),
        horizon=horizon,
        name=name,
    )
    if validate:
        validate_problem(p)
    return p


def validate_problem(p: Problem, lattice: int = VALIDATION_LATTICE) -> None:
    """c > 0 and f(t, x, 0, 0, 0) = 0 on a lattice × lattice grid of the window."""
    t = np.linspace(p.t0, p.t0 + p.horizon, lattice)
    x = np.linspace(0.0, p.L, lattice)
    tt, xx = np.meshgrid(t, x, indexing="ij")
    c = p.speed(tt, xx)
    bad = np.argwhere(~(c > 0))
    if bad.size:
        i, j = bad[0]
        raise HypothesisViolation("propagation speed c must be positive", (tt[i, j], xx[i, j]))
    f = p.source(tt, xx)
    bad = np.argwhere(~(np.abs(f) <= F_ZERO_TOL))
    if bad.size:
        i, j = bad[0]
        raise HypothesisViolation("f(t, x, 0, 0, 0) must vanish", (tt[i, j], xx[i, j]))


def catalog(name: str, **overrides: Any) -> Problem:
    if name not in CATALOG:
        raise UnknownProblemError(f"unknown catalog problem {name!r}")
    return make_problem({"catalog": name, **overrides})


# ─────────────────────────── compatibility ──────────────────────────
@dataclass(frozen=True)
class CornerResidual:
    corner: Tuple[float, float]
    side: str
    kind: str
    level: int
    residual: float
    passed: bool
    applicable: bool = True


@dataclass(frozen=True)
class CompatibilityReport:
    residuals: Tuple[CornerResidual, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residuals)

    def failures(self) -> List[CornerResidual]:
        return [r for r in self.residuals if not r.passed]

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "t": r.corner[0], "x": r.corner[1], "side": r.side, "kind": r.kind,
                "level": r.level, "residual": r.residual, "passed": r.passed,
                "applicable": r.applicable,
            }
            for r in self.residuals
        ]


def _corner_residuals(p: Problem, bc: BoundaryCondition, order: int, step: float) -> List[float]:
    t0 = p.t0
    xb = 0.0 if bc.side == "left" else p.L
    x = np.array([xb])
    tt = np.array([t0])
    phi0 = float(p.phi(x)[0])
    dphi = float(p.phi.derivative(x, 1, step)[0])
    d2phi = float(p.phi.derivative(x, 2, step)[0])
    psi0 = float(p.psi(x)[0])
    dpsi = float(p.psi.derivative(x, 1, step)[0])
    h0 = float(bc.h(tt)[0])
    dh = float(bc.h.derivative(tt, 1, step)[0])
    d2h = float(bc.h.derivative(tt, 2, step)[0])
    c = p.speed(t0, xb, phi0, dphi, psi0)
    f = p.source(t0, xb, phi0, dphi, psi0)
    utt = c * c * d2phi + f
    s = bc.sign

    if bc.kind == "dirichlet":
        levels = [h0 - phi0, dh - psi0, d2h - utt]
    elif bc.kind == "neumann":
        levels = [dphi - h0, dpsi - dh]
    elif bc.kind == "robin":
        levels = [dphi + s * bc.alpha * phi0 - h0, dpsi + s * bc.alpha * psi0 - dh]
    else:
        levels = [dphi + s * bc.beta * psi0 - h0, dpsi + s * bc.beta * utt - dh]
    return levels[: order + 1]


def check_compatibility(
    p: Problem,
    order: int = 2,
    *,
    tol: float = COMPAT_TOL,
    step: float = FD_STEP,
) -> CompatibilityReport:
    """
    Residuals of the corner compatibility conditions up to `order`.
    Non-dirichlet conditions only carry levels 0 and 1; level 2 is reported
    as not applicable (passing).
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    out: List[CornerResidual] = []
    for bc in (p.bc_left, p.bc_right):
        corner = (p.t0, 0.0 if bc.side == "left" else p.L)
        levels = _corner_residuals(p, bc, order, step)
        for level in range(order + 1):
            if level < len(levels):
                r = float(levels[level])
                out.append(CornerResidual(corner, bc.side, bc.kind, level, r, abs(r) <= tol))
            else:
                out.append(CornerResidual(corner, bc.side, bc.kind, level, 0.0, True, applicable=False))
    report = CompatibilityReport(tuple(out), tol)
    for r in report.failures():
        logger.warning(
            "compatibility level %d fails at %s corner (%s): residual %.3e",
            r.level, r.side, r.kind, r.residual,
        )
    return report


# ─────────────────────── spherical reduction ───────────────────────
def reduce_spherical(
    n: int,
    r1: float,
    r2: float,
    c_nd: str,
    f_nd: str,
    data: Optional[Mapping[str, Any]] = None,
) -> Problem:
    """
    Radial reduction on the hollow ball r1 ≤ |x| ≤ r2.

    Coefficients are written in t, r, u, w (= u_t) and v, where v stands for
    the radial flux r·u_r. The 1-D problem lives on x ∈ [0, r2 − r1], r = x + r1,
    and carries f_eff = f + ((n − 1)/r)·c²·u_r.
    """
    data = dict(data or {})
    if n < 1:
        raise SphericalGeometryError(f"dimension must be at least 1, got n={n}")
    if not r1 > 0:
        raise SphericalGeometryError(f"inner radius must be positive (singular at r = 0), got r1={r1}")
    if not r2 > r1:
        raise SphericalGeometryError(f"need r1 < r2, got r1={r1}, r2={r2}")

    radius = BinOp("+", Var("x"), Num(float(r1)))
    coef_map = {"r": radius, "v": BinOp("*", radius, Var("v"))}
    c_tree = substitute(parse(str(c_nd)), coef_map)
    f_tree = substitute(parse(str(f_nd)), coef_map)
    extra = BinOp(
        "*",
        BinOp("*", BinOp("/", Num(float(n - 1)), radius), BinOp("^", c_tree, Num(2.0))),
        Var("v"),
    )
    f_eff = BinOp("+", f_tree, extra)

    def radial(src: str) -> str:
        return pretty(substitute(parse(str(src)), {"r": radius}))

    config: Dict[str, Any] = {
        "name": data.pop("name", f"spherical-n{n}"),
        "c": pretty(c_tree),
        "f": pretty(f_eff),
        "L": float(r2 - r1),
    }
    for key in ("phi", "psi"):
        if key in data:
            config[key] = radial(data.pop(key))
    config.update(data)
    p = make_problem(config)
    return replace(p, meta={**p.meta, "spherical": {"n": n, "r1": r1, "r2": r2, "c": c_nd, "f": f_nd}})


# ───────────────────────────── mirror ───────────────────────────────
def mirror(p: Problem) -> Problem:
    """Reflect x ↦ L − x: u_x changes sign, the two boundary conditions swap."""
    L = Num(float(p.L))
    flip_x = {"x": BinOp("-", L, Var("x")), "v": Neg(Var("v"))}

    def coef(e: CompiledExpression) -> CompiledExpression:
        return compile_expression(pretty(substitute(e.tree, flip_x)))

    def data(fn):
        if isinstance(fn, ExprFunction):
            return ExprFunction(pretty(substitute(fn.expr.tree, {"x": flip_x["x"]})), "x")
        return SampledFunction(p.L - fn.nodes[::-1], fn.values[::-1], label="mirrored")

    def boundary(bc: BoundaryCondition, side: str) -> BoundaryCondition:
        h = bc.h
        if bc.kind != "dirichlet":
            if isinstance(h, ExprFunction):
                h = ExprFunction(pretty(Neg(h.expr.tree)), "t")
            else:
                dv = None if h.derivative_values is None else -h.derivative_values
                h = SampledFunction(h.nodes, -h.values, dv, label="mirrored")
        return replace(bc, side=side, h=h)

    return replace(
        p,
        c=coef(p.c),
        f=coef(p.f),
        bc_left=boundary(p.bc_right, "left"),
        bc_right=boundary(p.bc_left, "right"),
        phi=data(p.phi),
        psi=data(p.psi),
        name=f"{p.name}-mirrored",
    )
