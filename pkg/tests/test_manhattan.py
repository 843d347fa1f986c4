import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from conftest import SQRT2, bowen_root_two_letters
from thermocount.errors import NoCrossing
from thermocount.manhattan import (
    CSV_COLUMNS,
    chord_margins,
    curve_point,
    finite_difference_slope,
    geometric_intersection_check,
    intersection,
    trace_curve,
)
from thermocount.potential import letter_potential
from thermocount.shift_core import full_shift, truncate_finite
from thermocount.thermo import solve_delta

DELTA = bowen_root_two_letters(1, SQRT2)


def ray_oracle(theta):
    """Crossing of the ray with log(e^{-a - sqrt2 b} + e^{-sqrt2 a - b}) = 0."""
    c, s = math.cos(theta), math.sin(theta)
    t = brentq(lambda t: math.log(math.exp(-t * (c + SQRT2 * s)) + math.exp(-t * (SQRT2 * c + s))),
               1e-9, 10, xtol=1e-15)
    return t * c, t * s


def test_identical_potentials_give_a_line(full2, f_irr):
    pts = trace_curve(f_irr, f_irr, full2, rays=7)
    for p in pts:
        assert p.a + p.b == pytest.approx(DELTA, abs=1e-9)
        assert p.slope == pytest.approx(-1.0, abs=1e-12)


def test_doubled_potential(full2, f_irr):
    pts = trace_curve(f_irr, 2 * f_irr, full2, rays=9)
    assert (pts[0].a, pts[0].b) == (pytest.approx(DELTA, abs=1e-9), 0.0)
    assert (pts[-1].a, pts[-1].b) == (0.0, pytest.approx(DELTA / 2, abs=1e-9))
    for p in pts:
        assert p.slope == pytest.approx(-0.5, abs=1e-8)
        assert p.a + 2 * p.b == pytest.approx(DELTA, abs=1e-9)


def test_symmetric_arc(full2, f_irr, g_irr):
    pts = trace_curve(f_irr, g_irr, full2, rays=9)
    for p, q in zip(pts, reversed(pts)):
        assert p.a == pytest.approx(q.b, abs=1e-9)
    mid = pts[4]
    assert mid.slope == pytest.approx(-1.0, abs=1e-12)
    for p in pts:
        a, b = ray_oracle(p.theta)
        assert (p.a, p.b) == (pytest.approx(a, abs=1e-9), pytest.approx(b, abs=1e-9))
        assert p.residual <= 1e-9
        assert p.slope < 0
    assert min(chord_margins(pts)) > 1e-6


def test_endpoints_match_bowen_roots(full2, f_irr):
    g = letter_potential({"a": 0.7, "b": 2.1})
    pts = trace_curve(f_irr, g, full2, rays=5, tol=1e-10)
    assert pts[0].a == pytest.approx(solve_delta(f_irr, full2), abs=2e-10)
    assert pts[-1].b == pytest.approx(solve_delta(g, full2), abs=2e-10)


@pytest.mark.parametrize("theta", [0.3, 0.8, 1.2])
def test_slope_against_finite_differences(full2, f_irr, g_irr, theta):
    p = curve_point(f_irr, g_irr, full2, theta)
    fd = finite_difference_slope(f_irr, g_irr, full2, theta)
    assert p.slope == pytest.approx(fd, abs=max(1e-4, 5e-10))


@pytest.mark.parametrize("theta", [0.1, 0.3, 1.0])
def test_slope_against_bernoulli_means(full2, f_irr, g_irr, theta):
    a, b = ray_oracle(theta)
    pa, pb = math.exp(-a - SQRT2 * b), math.exp(-SQRT2 * a - b)
    expected = -(pa + SQRT2 * pb) / (SQRT2 * pa + pb)
    assert curve_point(f_irr, g_irr, full2, theta).slope == pytest.approx(expected, abs=1e-9)


def test_depth_two_curve(no_aa, f_irr, g_irr):
    pts = trace_curve(f_irr, g_irr, no_aa, rays=7, depth=2)
    assert all(p.crossed for p in pts)
    assert min(chord_margins(pts)) >= -1e-6


def test_enlarged_domain(full2, f_irr, g_irr):
    pts = trace_curve(f_irr, g_irr, full2, rays=7, enlarged=True)
    assert pts[0].theta < 0 and pts[-1].theta > math.pi / 2
    assert all(p.crossed for p in pts)
    assert min(chord_margins(pts)) > 0


def test_ray_without_crossing(full2, f_irr, g_irr):
    with pytest.raises(NoCrossing):
        curve_point(f_irr, g_irr, full2, math.pi)


def test_intersection_examples(full2, f_irr, g_irr):
    same = intersection(f_irr, f_irr, full2)
    assert same.I == pytest.approx(1) and same.J == pytest.approx(1) and same.rigidity == "rigid"
    double = intersection(f_irr, 2 * f_irr, full2)
    assert double.I == pytest.approx(2, abs=1e-9)
    assert double.delta_g == pytest.approx(double.delta_f / 2, abs=1e-10)
    assert double.J == pytest.approx(1, abs=1e-6) and double.rigidity == "rigid"
    pair = intersection(f_irr, g_irr, full2)
    assert pair.rigidity == "non_rigid" and pair.margin > 1e-3
    assert pair.J == pytest.approx(1.0418949911864326, abs=1e-9)
    assert set(pair.to_dict()) >= {"I", "J", "delta_f", "delta_g", "rigidity", "margin"}


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3), st.floats(0.2, 3), st.floats(0.2, 3), st.floats(0.2, 3))
def test_renormalized_intersection_at_least_one(fa, fb, ga, gb):
    shift = truncate_finite(full_shift("ab"))
    f = letter_potential({"a": fa, "b": fb})
    g = letter_potential({"a": ga, "b": gb})
    assert intersection(f, g, shift).J >= 1 - 1e-8


def test_geometric_intersection(full2, f_irr, g_irr):
    emp, thermo = geometric_intersection_check(f_irr, f_irr, full2, 10)
    assert emp == pytest.approx(1) and thermo == pytest.approx(1)
    emp, _ = geometric_intersection_check(f_irr, 2 * f_irr, full2, 10)
    assert emp == pytest.approx(2)
    emp, thermo = geometric_intersection_check(f_irr, g_irr, full2, 20)
    assert abs(emp - thermo) <= 0.1 * thermo


def test_rows(full2, f_irr, g_irr):
    assert tuple(curve_point(f_irr, g_irr, full2, 0.5).row()) == CSV_COLUMNS
