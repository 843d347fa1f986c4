"""Manhattan curves and pressure intersections of two roof functions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .counting import orbit_table
from .errors import InvalidInput, NoConvergence, NoCrossing, NoSignChange
from .potential import Potential, all_letter_bounds, livsic_test
from .shift_core import TruncatedShift
from .thermo import SCALAR_TOL, TransferDiscretization, build_transfer, solve_delta, spectral_pressure

CSV_COLUMNS = ("theta", "a", "b", "slope", "residual")


@dataclass(frozen=True)
class ManhattanPoint:
    theta: float
    a: float
    b: float
    slope: float  # db/da along the curve
    residual: float  # |P(-a f - b g)|
    crossed: bool = True

    def row(self) -> dict:
        return {"theta": self.theta, "a": self.a, "b": self.b, "slope": self.slope, "residual": self.residual}


def _joint_operator(f: Potential, g: Potential, shift: TruncatedShift, depth: int) -> TransferDiscretization:
    return build_transfer(shift, f, depth).with_terms([(1.0, f), (0.0, g)])


def _direction(theta: float) -> tuple[float, float]:
    # exact values on the axes so the endpoints reduce to single-potential roots
    if theta == 0.0:
        return 1.0, 0.0
    if theta == math.pi / 2:
        return 0.0, 1.0
    return math.cos(theta), math.sin(theta)


def curve_point(
    f: Potential,
    g: Potential,
    shift: TruncatedShift,
    theta: float,
    tol: float = SCALAR_TOL,
    op: TransferDiscretization | None = None,
    depth: int = 1,
) -> ManhattanPoint:
    """Crossing of the ray at angle ``theta`` with ``P(-a f - b g) = 0``."""
    base = op if op is not None else _joint_operator(f, g, shift, depth)
    ca, cb = _direction(theta)
    ray = base.with_terms([(ca, f), (cb, g)])
    try:
        t = solve_delta(f, shift, tol=tol, op=ray)
    except (NoSignChange, NoConvergence) as exc:
        raise NoCrossing(f"no crossing on the ray theta = {theta:.6g}: {exc}") from exc
    a, b = t * ca, t * cb
    eq = spectral_pressure(ray.scaled(-t))
    mf, mg = eq.integrate(f), eq.integrate(g)
    return ManhattanPoint(theta, a, b, -mf / mg, abs(eq.pressure))


def _angle_range(f: Potential, g: Potential, shift: TruncatedShift, enlarged: bool) -> tuple[float, float]:
    if not enlarged:
        return 0.0, math.pi / 2
    # one negative coefficient, as long as a f + b g stays positive; keep 10% inside
    bf = all_letter_bounds(f, shift)
    bg = all_letter_bounds(g, shift)
    cf, sf = min(b.lower for b in bf), max(b.upper for b in bf)
    cg, sg = min(b.lower for b in bg), max(b.upper for b in bg)
    if cf <= 0 or cg <= 0:
        raise InvalidInput("enlarged domain needs strictly positive potentials")
    return -0.9 * math.atan(cf / sg), math.pi / 2 + 0.9 * math.atan(cg / sf)


def trace_curve(
    f: Potential,
    g: Potential,
    shift: TruncatedShift,
    rays: int = 17,
    tol: float = SCALAR_TOL,
    depth: int = 1,
    enlarged: bool = False,
) -> list[ManhattanPoint]:
    """Points of the Manhattan curve on ``rays`` evenly spaced directions.

    Angles run from the a-axis to the b-axis inclusive.  A ray without a
    crossing yields a point with ``crossed=False`` and NaN coordinates.
    """
    if rays < 2:
        raise InvalidInput("need at least two rays")
    lo, hi = _angle_range(f, g, shift, enlarged)
    op = _joint_operator(f, g, shift, depth)
    out = []
    for j in range(rays):
        theta = hi if j == rays - 1 else lo + j * (hi - lo) / (rays - 1)
        try:
            out.append(curve_point(f, g, shift, theta, tol, op))
        except NoCrossing:
            out.append(ManhattanPoint(theta, math.nan, math.nan, math.nan, math.nan, crossed=False))
    if not any(p.crossed for p in out):
        raise NoCrossing("no ray crossed the curve")
    return out


def chord_margins(points: Sequence[ManhattanPoint]) -> list[float]:
    """For consecutive triples, chord height minus the middle point's b (>= 0 when convex)."""
    pts = sorted((p for p in points if p.crossed), key=lambda p: p.a)
    out = []
    for p0, p1, p2 in zip(pts, pts[1:], pts[2:]):
        span = p2.a - p0.a
        if span <= 0:
            continue
        chord = p0.b + (p2.b - p0.b) * (p1.a - p0.a) / span
        out.append(chord - p1.b)
    return out


def finite_difference_slope(
    f: Potential, g: Potential, shift: TruncatedShift, theta: float, h: float = 1e-4,
    tol: float = SCALAR_TOL, depth: int = 1,
) -> float:
    """Centered secant slope through the crossings at ``theta +- h``."""
    op = _joint_operator(f, g, shift, depth)
    p0 = curve_point(f, g, shift, theta - h, tol, op)
    p1 = curve_point(f, g, shift, theta + h, tol, op)
    return (p1.b - p0.b) / (p1.a - p0.a)


@dataclass(frozen=True)
class IntersectionReport:
    I: float
    J: float
    delta_f: float
    delta_g: float
    rigidity: str  # "rigid" or "non_rigid"
    margin: float  # J - 1
    livsic_violation: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def intersection(
    f: Potential,
    g: Potential,
    shift: TruncatedShift,
    tol: float = 1e-6,
    depth: int = 1,
    livsic_n: int = 6,
) -> IntersectionReport:
    """Pressure intersection ``I`` and its renormalization ``J = (delta_g/delta_f) I``.

    Rigid means both ``|J - 1| <= tol`` and exact proportionality of the
    periodic data ``delta_f S_n f = delta_g S_n g`` up to period ``livsic_n``.
    """
    op = _joint_operator(f, g, shift, depth)
    df = solve_delta(f, shift, op=op.with_terms([(1.0, f)]))
    dg = solve_delta(g, shift, op=op.with_terms([(1.0, g)]))
    eq = spectral_pressure(op.with_terms([(-df, f)]))
    I = eq.integrate(g) / eq.integrate(f)
    J = dg / df * I
    liv = livsic_test(f * df, g * dg, shift, livsic_n, tol=max(tol, 1e-9))
    rigid = abs(J - 1) <= tol and liv.cohomologous_up_to_tol
    return IntersectionReport(I, J, df, dg, "rigid" if rigid else "non_rigid", J - 1, liv.worst_violation)


def geometric_intersection_check(
    f: Potential, g: Potential, shift: TruncatedShift, t: float, delta_f: float | None = None, depth: int = 1,
) -> tuple[float, float]:
    """Average of ``S_n g / S_n f`` over prime orbits with ``S_n f <= t``, against ``I``.

    Each prime orbit counts once; ``delta_f`` is accepted for interface
    symmetry with the counting routines and recomputed when missing.
    """
    table = orbit_table(shift, [f, g], t)
    prim = table.primitive()
    num, den = [], 0
    for (n, c), p in prim.items():
        if p == 0:
            continue
        sf, sg = table.sums(c)
        if sf > t:
            continue
        orbits = p // n
        num.append(orbits * (sg / sf))
        den += orbits
    if den == 0:
        raise InvalidInput(f"no prime orbits with period <= {t}")
    empirical = math.fsum(num) / den
    op = build_transfer(shift, f, depth)
    df = delta_f if delta_f is not None else solve_delta(f, shift, op=op)
    eq = spectral_pressure(op.scaled(-df))
    return empirical, eq.integrate(g) / eq.integrate(f)


def curve_array(points: Sequence[ManhattanPoint]) -> np.ndarray:
    return np.array([[p.theta, p.a, p.b, p.slope, p.residual] for p in points])
