# tests/test_charsys.py
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from charsys import (
    CharState,
    State,
    boundary_resolve,
    boundary_state,
    check_degeneracy,
    eigenvalues,
    from_characteristic,
    invert_velocity,
    to_characteristic,
)
from errors import DegeneracyError, SpeedError
from problem import make_boundary, make_problem

small = st.floats(-0.1, 0.1, allow_nan=False)


QUASI = make_problem({"c": "1 + 0.2*v + 0.1*u", "f": "0"})


@pytest.fixture
def quasi():
    return QUASI


def test_eigenvalues(linear):
    assert eigenvalues(linear, 0.0, 0.5, State(0.0, 0.0, 0.0)) == (-1.0, 0.0, 1.0)


def test_eigenvalues_reject_nonpositive_speed():
    p = make_problem({"c": "1 + u", "f": "0"})
    with pytest.raises(SpeedError):
        eigenvalues(p, 0.0, 0.5, State(-2.0, 0.0, 0.0))


@settings(deadline=None)
@given(u=small, v=small, w=small, x=st.floats(0, 1))
def test_characteristic_round_trip(u, v, w, x):
    s = State(u, v, w)
    back = from_characteristic(QUASI, 0.3, x, to_characteristic(QUASI, 0.3, x, s))
    assert back.u == u
    assert back.v == pytest.approx(v, abs=1e-12)
    assert back.w == pytest.approx(w, abs=1e-15)


def test_invert_velocity_vectorised(quasi):
    v = np.array([-0.05, 0.0, 0.08])
    u = np.array([0.01, -0.02, 0.0])
    w = np.zeros(3)
    c = quasi.speed(0.0, 0.5, u, v, w)
    out = invert_velocity(quasi, 0.0, 0.5, u, 2.0 * c * v, w)
    np.testing.assert_allclose(out, v, atol=1e-12)


def test_state_rejects_non_finite():
    with pytest.raises(ValueError):
        State(float("nan"), 0.0, 0.0)


def test_charstate_completion_flag():
    assert not CharState(0.1, 0.0, None).complete
    assert CharState(0.1, 0.0, 0.2).w == pytest.approx(0.15)


# ─────────────────────────── boundary relations ───────────────────────────
@pytest.mark.parametrize("condition", [
    {"kind": "dirichlet", "h": "0.02"},
    {"kind": "neumann", "h": "0.01"},
    {"kind": "robin", "h": "0.01", "alpha": 2.0},
    {"kind": "dissipative", "h": "0.0", "beta": 0.5},
])
@pytest.mark.parametrize("side", ["left", "right"])
def test_boundary_state_satisfies_condition(condition, side):
    p = make_problem({"c": "1.5 + 0.3*x", "f": "0"})
    bc = make_boundary(side, condition)
    xb = 0.0 if side == "left" else 1.0
    c = p.speed(0.0, xb)
    u = 0.02 if condition["kind"] == "dirichlet" else 0.013
    # forward march: the left node knows v1 (from the interior), the right knows v3
    partial = CharState(0.07, u, None) if side == "left" else CharState(None, u, -0.04)
    s = boundary_state(p, bc, 0.0, partial, float(bc.h(np.array([0.0]))[0]), 0.0, speed=c)
    assert bc.residual(np.array([0.0]), s.u, s.v, s.w)[0] == pytest.approx(0.0, abs=1e-14)
    # the known invariant is untouched
    if side == "left":
        assert c * s.v + s.w == pytest.approx(0.07, abs=1e-14)
    else:
        assert -c * s.v + s.w == pytest.approx(-0.04, abs=1e-14)


def test_boundary_resolve_solves_state_dependent_speed():
    p = make_problem({"c": "1 + 0.5*w", "f": "0"})
    bc = make_boundary("left", {"kind": "neumann", "h": "0.05"})
    cs = boundary_resolve(p, bc, 0.0, CharState(0.1, 0.0, None), 0.05, 0.0)
    w = cs.w
    c = 1 + 0.5 * w
    # v1 = c·v + w with v = h
    assert c * 0.05 + w == pytest.approx(0.1, abs=1e-10)
    assert (cs.v1 - cs.v3) / (2 * c) == pytest.approx(0.05, abs=1e-10)


def test_boundary_resolve_needs_one_known_invariant(linear):
    bc = linear.bc_left
    with pytest.raises(ValueError):
        boundary_resolve(linear, bc, 0.0, CharState(0.1, 0.0, 0.2), 0.0, 0.0)
    with pytest.raises(ValueError):
        boundary_resolve(linear, bc, 0.0, CharState(None, 0.0, None), 0.0, 0.0)


def test_dissipative_degeneracy():
    # β = 1/c at the left end with v3 known: the relation loses the incoming variable
    p = make_problem({"c": "2", "f": "0"})
    bc = make_boundary("left", {"kind": "dissipative", "h": "0", "beta": 0.5})
    with pytest.raises(DegeneracyError):
        boundary_resolve(p, bc, 0.0, CharState(None, 0.0, 0.1), 0.0, 0.0)
    # the forward direction (v1 known) is fine
    boundary_resolve(p, bc, 0.0, CharState(0.1, 0.0, None), 0.0, 0.0)


def test_check_degeneracy_detects_crossing():
    p = make_problem({"c": "2 + sin(t)", "f": "0"})
    crossing = make_boundary("right", {"kind": "dissipative", "h": "0", "beta": 0.45})
    with pytest.raises(DegeneracyError):
        check_degeneracy(p, crossing, np.linspace(0.0, 4.0, 200))
    clear = make_boundary("right", {"kind": "dissipative", "h": "0", "beta": 0.2})
    check_degeneracy(p, clear, np.linspace(0.0, 4.0, 200))
    check_degeneracy(p, p.bc_left, np.linspace(0.0, 4.0, 200))
