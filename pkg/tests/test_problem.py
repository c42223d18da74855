# tests/test_problem.py
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from errors import (
    ConfigError,
    HypothesisViolation,
    SphericalGeometryError,
    UnboundVariableError,
    UnknownProblemError,
)
from problem import (
    CATALOG,
    BoundaryCondition,
    ExprFunction,
    SampledFunction,
    catalog,
    check_compatibility,
    make_boundary,
    make_problem,
    mirror,
    reduce_spherical,
    smallness_guard,
)


# ─────────────────────────── construction ───────────────────────────
@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_entries_validate(name):
    p = catalog(name)
    assert p.name == name
    assert p.L == 1.0
    assert p.speed(p.t0, 0.5) > 0


def test_catalog_overrides():
    p = catalog("nonauto-sin", L=2.0, phi="0")
    assert p.L == 2.0
    assert p.c.source == "2 + sin(t)"
    assert float(np.max(np.abs(p.phi(np.linspace(0, 2, 5))))) == 0.0


def test_unknown_catalog_entry():
    with pytest.raises(UnknownProblemError):
        catalog("no-such-problem")
    with pytest.raises(UnknownProblemError):
        make_problem({"catalog": "nope"})


def test_unknown_problem_key():
    with pytest.raises(ConfigError):
        make_problem({"catalog": "linear-unit", "speed": "1"})


def test_nonpositive_speed_is_rejected_with_location():
    with pytest.raises(HypothesisViolation) as err:
        make_problem({"c": "x - 0.5", "f": "0"})
    t, x = err.value.point
    assert x <= 0.5


def test_source_must_vanish_at_zero_state():
    with pytest.raises(HypothesisViolation):
        make_problem({"c": "1", "f": "1"})
    # vanishing at zero state is enough
    make_problem({"c": "1", "f": "u*v + sin(w)"})


def test_coefficients_only_use_known_variables():
    with pytest.raises(UnboundVariableError):
        make_problem({"c": "1 + r", "f": "0"})
    with pytest.raises(UnboundVariableError):
        make_problem({"c": "1", "f": "0", "phi": "t*x"})


def test_nonpositive_length():
    with pytest.raises(HypothesisViolation):
        make_problem({"c": "1", "f": "0", "L": -1.0})


# ─────────────────────────── boundaries ───────────────────────────
def test_boundary_parameters_are_checked():
    with pytest.raises(ConfigError):
        make_boundary("left", {"kind": "robin", "h": "0"})
    with pytest.raises(ConfigError):
        make_boundary("left", {"kind": "robin", "h": "0", "alpha": -1.0})
    with pytest.raises(ConfigError):
        make_boundary("right", {"kind": "neumann", "h": "0", "beta": 1.0})
    with pytest.raises(ConfigError):
        make_boundary("left", {"kind": "periodic"})
    with pytest.raises(ConfigError):
        make_boundary("left", {"kind": "dirichlet", "gain": 1})


def test_boundary_orders():
    d = make_boundary("left", {"kind": "dirichlet", "h": "0"})
    n = make_boundary("right", {"kind": "neumann", "h": "0"})
    assert (d.l, d.d) == (2, 1)
    assert (n.l, n.d) == (1, 2)
    assert (d.sign, n.sign) == (-1.0, 1.0)


@given(
    kind=st.sampled_from(["neumann", "robin", "dissipative"]),
    side=st.sampled_from(["left", "right"]),
    u=st.floats(-1, 1),
    w=st.floats(-1, 1),
)
def test_velocity_satisfies_relation(kind, side, u, w):
    bc = BoundaryCondition(
        kind, side, ExprFunction("0.3", "t"),
        alpha=0.7 if kind == "robin" else None,
        beta=0.4 if kind == "dissipative" else None,
    )
    v = bc.velocity(u, w, 0.3)
    assert abs(bc.residual(np.array([0.0]), u, v, w)[0]) < 1e-12


def test_sampled_function_interpolates():
    f = SampledFunction([0.0, 1.0, 2.0], [0.0, 2.0, 0.0], derivative_values=[2.0, 0.0, -2.0])
    assert f(0.5) == pytest.approx(1.0)
    assert f.derivative(np.array([0.5]))[0] == pytest.approx(1.0)
    assert f.derivative(np.array([1.0]), order=2)[0] == pytest.approx(-4.0 / 1e-5, rel=1e-3)


# ─────────────────────────── compatibility ───────────────────────────
def test_reference_problems_are_compatible(linear, one_sided):
    assert check_compatibility(linear).passed
    report = check_compatibility(one_sided)
    assert report.passed
    right = [r for r in report.residuals if r.side == "right"]
    assert [r.applicable for r in right] == [True, True, False]


def test_incompatible_corner_is_reported():
    p = make_problem({"catalog": "linear-unit", "phi": "0.05*sin(pi*x) + 0.01"})
    report = check_compatibility(p)
    assert not report.passed
    failing = {(r.side, r.level) for r in report.failures()}
    assert ("left", 0) in failing and ("right", 0) in failing
    assert len(report.rows()) == 6


def test_second_order_dirichlet_condition():
    # u_tt = c²φ'' must match h'' at the corner: φ = x² breaks it at x = 0
    p = make_problem({"catalog": "linear-unit", "phi": "0.05*x^2*(1 - x)^2"})
    report = check_compatibility(p)
    levels = {(r.side, r.level): r for r in report.residuals}
    assert levels[("left", 0)].passed and levels[("left", 1)].passed
    assert not levels[("left", 2)].passed
    assert levels[("left", 2)].residual == pytest.approx(-0.1, abs=1e-4)


# ─────────────────────────── spherical ───────────────────────────
def test_spherical_reduction_adds_radial_term():
    p = reduce_spherical(3, 1.0, 2.0, "1", "0", {"phi": "0.01*(r - 1)^3*(2 - r)^3"})
    assert p.L == pytest.approx(1.0)
    # f_eff = ((n - 1)/r) c² u_r with r = x + r1
    assert p.source(0.0, 0.0, 0.0, 0.5, 0.0) == pytest.approx(1.0)
    assert p.source(0.0, 1.0, 0.0, 0.5, 0.0) == pytest.approx(0.5)
    assert p.meta["spherical"]["n"] == 3
    # phi was written in r; at x = 0.5 the radius is 1.5
    assert p.phi(np.array([0.5]))[0] == pytest.approx(0.01 * 0.5**3 * 0.5**3)


def test_spherical_one_dimension_has_no_extra_term():
    p = reduce_spherical(1, 0.5, 1.5, "1", "0")
    assert p.source(0.0, 0.3, 0.0, 0.7, 0.0) == 0.0


@pytest.mark.parametrize("n, r1, r2", [(0, 1.0, 2.0), (3, 0.0, 1.0), (3, 2.0, 2.0), (2, -1.0, 1.0)])
def test_spherical_geometry_errors(n, r1, r2):
    with pytest.raises(SphericalGeometryError):
        reduce_spherical(n, r1, r2, "1", "0")


# ─────────────────────────── mirror / guard ───────────────────────────
def test_mirror_swaps_ends(one_sided):
    m = mirror(one_sided)
    assert (m.bc_left.kind, m.bc_right.kind) == ("neumann", "dirichlet")
    assert (m.bc_left.side, m.bc_right.side) == ("left", "right")
    x = np.linspace(0, 1, 9)
    np.testing.assert_allclose(m.phi(x), one_sided.phi(1 - x), atol=1e-15)
    mm = mirror(m)
    np.testing.assert_allclose(mm.phi(x), one_sided.phi(x), atol=1e-15)


def test_mirror_flips_gradient_dependence():
    p = make_problem({"c": "1 + 0.1*v + 0.2*x", "f": "0"})
    m = mirror(p)
    assert m.speed(0.0, 0.25, 0.0, -0.3, 0.0) == pytest.approx(p.speed(0.0, 0.75, 0.0, 0.3, 0.0))


def test_smallness_guard():
    mask = np.array([[True, False]])
    sol = SimpleNamespace(
        u=np.array([[0.01, 9.0]]), v=np.array([[-0.2, 9.0]]), w=np.array([[0.05, 9.0]]), mask=mask,
    )
    guard = smallness_guard(sol, epsilon=0.1)
    assert guard.c1_bound == pytest.approx(0.2)
    assert not guard.passed
    assert smallness_guard(sol, epsilon=0.5).passed
