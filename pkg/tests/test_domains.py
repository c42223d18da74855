# tests/test_domains.py
import numpy as np
import pytest

from domains import (
    Curve,
    build_domain,
    curves_frame,
    find_Ttilde,
    state_at,
    trace_curve,
    trace_curves,
)
from errors import DomainIntersectionError, DomainMismatchError, MaskError
from hypersolve import SidewaysData, solve_cauchy_sideways
from problem import make_problem


def _fields(p, T: float, nt: int):
    """Sideways fields from zero traces on both ends of a window of length T."""
    t = np.linspace(p.t0, p.t0 + T, nt + 1)
    zero = np.zeros_like(t)
    rightward = solve_cauchy_sideways(p, SidewaysData("left", t, zero, zero))
    leftward = solve_cauchy_sideways(p, SidewaysData("right", t, zero, zero))
    return rightward, leftward


def _domains(p, T: float, nt: int):
    rightward, leftward = _fields(p, T, nt)
    curves = {**trace_curves(p, rightward, ("x1", "x2")), **trace_curves(p, leftward, ("x3", "x4"))}
    dr = build_domain([curves["x1"], curves["x2"]], "right", p.L)
    dl = build_domain([curves["x3"], curves["x4"]], "left", p.L)
    return curves, dr, dl


def test_linear_curves_are_straight(linear):
    curves, _, _ = _domains(linear, 1.2, 240)
    x2 = curves["x2"]
    t = x2.t
    inside = t <= 1.0
    np.testing.assert_allclose(x2.x[inside], t[inside], atol=1e-9)
    x1 = curves["x1"]
    np.testing.assert_allclose(x1.x[t >= 0.2], 1.2 - t[t >= 0.2], atol=1e-9)
    assert x1.start == (pytest.approx(1.2), 0.0)
    np.testing.assert_allclose(curves["x4"].x[inside], 1.0 - t[inside], atol=1e-9)
    np.testing.assert_allclose(curves["x3"].x[t >= 0.2], t[t >= 0.2] - 0.2, atol=1e-9)


def test_curve_exit_is_clamped(linear):
    curves, _, _ = _domains(linear, 2.2, 440)
    x2 = curves["x2"]
    assert x2.exit_t == pytest.approx(1.0, abs=1e-6)
    assert np.all(x2.x[x2.t > 1.0 + 1e-6] == 1.0)
    assert np.all((x2.x >= 0.0) & (x2.x <= 1.0))
    np.testing.assert_allclose(x2.slopes()[x2.t[1:] < 0.99], 1.0, atol=1e-9)


def test_two_sided_Ttilde_is_midpoint_of_overlap(linear):
    _, dr, dl = _domains(linear, 1.2, 240)
    T_tilde, overlap = find_Ttilde(dr, dl, "two_sided")
    assert overlap.S[0] == pytest.approx(0.5, abs=0.01)
    assert overlap.S[1] == pytest.approx(0.7, abs=0.01)
    assert T_tilde == pytest.approx(0.6, abs=0.006)
    lo, hi = overlap.interval
    assert lo == pytest.approx(0.4, abs=0.01) and hi == pytest.approx(0.6, abs=0.01)
    assert dr.contains(T_tilde, 0.5) and dl.contains(T_tilde, 0.5)


def test_one_sided_Ttilde(linear):
    _, dr, dl = _domains(linear, 2.2, 440)
    T_tilde, overlap = find_Ttilde(dr, None, "one_sided")
    assert overlap.S[0] == pytest.approx(1.0, abs=0.01)
    assert overlap.S[1] == pytest.approx(1.2, abs=0.01)
    assert T_tilde == pytest.approx(1.1, abs=0.006)
    assert overlap.interval == (0.0, 1.0)

    T_right, _ = find_Ttilde(None, dl, "one_sided_right")
    assert T_right == pytest.approx(1.1, abs=0.006)


def test_short_window_does_not_intersect(linear):
    _, dr, dl = _domains(linear, 0.9, 180)
    with pytest.raises(DomainIntersectionError, match="do not intersect"):
        find_Ttilde(dr, dl, "two_sided")
    with pytest.raises(DomainIntersectionError, match="do not traverse"):
        find_Ttilde(dr, None, "one_sided")


def test_variable_speed_bends_curves():
    p = make_problem({"catalog": "autonomous-variable", "phi": "0"})
    curves, dr, dl = _domains(p, 1.2, 240)
    x2 = curves["x2"]
    # c ≥ 1 inside the interval, so x2 runs ahead of the unit-speed line
    k = np.flatnonzero(x2.t <= 0.5)
    assert np.all(x2.x[k[1:]] > x2.t[k[1:]])
    assert not dr.empty and not dl.empty


def test_build_domain_checks_curves(linear):
    rightward, _ = _fields(linear, 1.2, 240)
    x1 = trace_curve(linear, rightward, "x1")
    with pytest.raises(DomainMismatchError):
        build_domain([x1], "right", 1.0)
    other = Curve("x2", np.linspace(0, 1, 11), np.zeros(11), (0.0, 0.0))
    with pytest.raises(DomainMismatchError):
        build_domain([x1, other], "right", 1.0)
    with pytest.raises(DomainMismatchError):
        find_Ttilde(None, None, "two_sided")


def test_state_at_clamps_and_reports_mask(linear):
    rightward, _ = _fields(linear, 1.0, 200)
    s = state_at(rightward, 0.5, 0.25)
    assert (s.u, s.v, s.w) == (0.0, 0.0, 0.0)
    # row 0 holds only the x = 0 column; larger x clamps onto it
    state_at(rightward, 0.0, 0.9)
    rightward.mask[:, :] = False
    with pytest.raises(MaskError):
        state_at(rightward, 0.5, 0.5)


def test_curves_frame(linear):
    curves, _, _ = _domains(linear, 1.2, 240)
    frame = curves_frame(curves.values())
    assert list(frame.columns) == ["t", "x1", "x2", "x3", "x4"]
    assert len(frame) == 241
    assert curves_frame([]).empty


@pytest.mark.parametrize("name", ["linear-unit", "autonomous-variable"])
def test_x1_stays_right_of_x4(name):
    p = make_problem({"catalog": name, "phi": "0"})
    rightward, leftward = _fields(p, 1.2, 240)
    x1 = trace_curve(p, rightward, "x1")
    x4 = trace_curve(p, leftward, "x4")
    gap = x1.x - x4.at(x1.t)
    assert gap.min() >= -rightward.grid.dx


@pytest.mark.parametrize("mode, windows", [("two_sided", (1.2, 1.4, 1.6)), ("one_sided", (2.2, 2.4, 2.6))])
def test_S_grows_with_the_window(linear, mode, windows):
    dt = 0.005
    spans = []
    for T in windows:
        _, dr, dl = _domains(linear, T, int(round(T / dt)))
        _, overlap = find_Ttilde(dr, dl if mode == "two_sided" else None, mode)
        spans.append(overlap.S)
    for (lo, hi), (big_lo, big_hi) in zip(spans, spans[1:]):
        assert big_lo <= lo + dt + 1e-12
        assert big_hi >= hi - 1e-12
        assert big_hi - big_lo > hi - lo
