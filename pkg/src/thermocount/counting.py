"""Renewal functions, closed-orbit counts and equidistribution sums.

Counts are exact: orbit counts use integer and rational arithmetic, and the
only floating-point step is comparing a Birkhoff sum with the threshold t.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import BudgetExplosion, CutoffTooSmall, InvalidInput, SamplePointPeriodic
from .potential import Potential, all_letter_bounds, eval_birkhoff
from .shift_core import TruncatedShift, fix_array, mobius, smallest_period
from .thermo import build_transfer, spectral_pressure

DEFAULT_NODE_LIMIT = 5_000_000


# sample points


def is_eventually_periodic(seq: Sequence, min_tail: int | None = None) -> bool:
    """True if the last two thirds of ``seq`` repeat with some period <= len/3."""
    n = len(seq)
    tail = tuple(seq[n // 3:]) if min_tail is None else tuple(seq[-min_tail:])
    m = len(tail)
    for p in range(1, m // 2 + 1):
        if tail[p:] == tail[:-p]:
            return True
    return False


def sample_point(shift: TruncatedShift, prefix_idx: Sequence[int], length: int = 64) -> tuple[int, ...]:
    """Aperiodic admissible point extending ``prefix_idx``, as letter indices."""
    pt = shift.aperiodic_extension_idx(tuple(prefix_idx), max(length, len(prefix_idx) + 24))
    if is_eventually_periodic(pt[len(prefix_idx):]):
        raise SamplePointPeriodic(f"extension of {shift.from_idx(prefix_idx)!r} looks periodic")
    return pt


# renewal function


@dataclass(frozen=True)
class RenewalQuery:
    """``N_f(phi, x, t)`` with ``x`` materialized as a long letter prefix.

    ``weight`` is a cylinder (phi its indicator) or ``None`` (phi = 1).
    """

    point: tuple
    t: float
    weight: tuple | None = None

    def preimage(self, a, t: float) -> "RenewalQuery":
        return RenewalQuery((a,) + self.point, t, self.weight)


def make_query(shift: TruncatedShift, prefix: Sequence, t: float, weight: Sequence | None = None,
               length: int = 64) -> RenewalQuery:
    pt = sample_point(shift, shift.to_idx(prefix), length)
    return RenewalQuery(shift.from_idx(pt), float(t), None if weight is None else tuple(weight))


class _LetterOrder:
    """Letters sorted by certified lower bound, per successor letter."""

    def __init__(self, f: Potential, shift: TruncatedShift):
        lbs = all_letter_bounds(f, shift, depth=1)
        self.lower = np.array([lb.lower for lb in lbs])
        if self.lower.min() <= 0:
            raise InvalidInput("potential must be strictly positive on the truncation (regularize first)")
        self.shift = shift
        self._pred: dict[int, list[tuple[float, object]]] = {}

    def preds(self, b: int):
        hit = self._pred.get(b)
        if hit is None:
            idx = self.shift.predecessors_idx(b)
            order = idx[np.argsort(self.lower[idx], kind="stable")]
            hit = [(float(self.lower[i]), self.shift.letters[i]) for i in order.tolist()]
            self._pred[b] = hit
        return hit


def renewal_count(
    f: Potential,
    q: RenewalQuery,
    shift: TruncatedShift,
    node_limit: int = DEFAULT_NODE_LIMIT,
    _order: _LetterOrder | None = None,
) -> tuple[int | float, int]:
    """Exact ``N_f(phi, x, t) = sum_n sum_{sigma^n y = x} phi(y) 1[S_n f(y) <= t]``.

    Depth-first over the preimage tree.  A branch is cut as soon as the
    certified lower bound of the new letter exceeds the remaining budget; the
    budget is decreased term by term, so the one-step renewal equation holds
    bit for bit.  Returns ``(value, nodes_visited)``.
    """
    order = _order or _LetterOrder(f, shift)
    depth = f.point_depth(1)
    weight = q.weight
    wl = 0 if weight is None else len(weight)
    if len(q.point) < max(depth, wl):
        raise InvalidInput("query point is shorter than the evaluation depth")
    index = shift.index
    total = 0
    nodes = 0
    # stack of (prefix word prepended to the point, remaining budget)
    stack = [((), q.t)]
    point = q.point
    while stack:
        w, rem = stack.pop()
        nodes += 1
        if nodes > node_limit:
            raise BudgetExplosion(node_limit, total)
        if rem < 0:
            continue
        y = w + point[: max(depth, wl)]
        if weight is None or y[:wl] == weight:
            total += 1
        first = index[y[0]]
        for lb, a in order.preds(first):
            if lb > rem:
                break
            ya = (a,) + y
            fv = f.value(ya[:depth])
            nr = rem - fv
            if nr >= 0:
                stack.append(((a,) + w, nr))
    return total, nodes


def renewal_equation_terms(f: Potential, q: RenewalQuery, shift: TruncatedShift,
                           node_limit: int = DEFAULT_NODE_LIMIT) -> tuple[int, int]:
    """Left and right side of ``N(x,t) = sum_{sigma y = x} N(y, t - f(y)) + phi(x) 1[t >= 0]``."""
    order = _LetterOrder(f, shift)
    lhs, _ = renewal_count(f, q, shift, node_limit, order)
    depth = f.point_depth(1)
    rhs = 0
    wl = 0 if q.weight is None else len(q.weight)
    if q.t >= 0 and (q.weight is None or q.point[:wl] == q.weight):
        rhs += 1
    first = shift.index[q.point[0]]
    for _, a in order.preds(first):
        y = (a,) + q.point
        sub = q.preimage(a, q.t - f.value(y[:depth]))
        rhs += renewal_count(f, sub, shift, node_limit, order)[0]
    return lhs, rhs


# orbit counting


@dataclass(frozen=True)
class CountRecord:
    t: float
    M: Fraction  # sum_n (1/n) #{x in Fix^n : S_n f(x) <= t}
    R: int  # number of prime orbits with period <= t
    predicted: float  # e^{t delta} / (t delta)
    ratio_M: float
    ratio_R: float
    nodes: int = 0

    def row(self) -> dict:
        return {
            "t": self.t, "M": float(self.M), "R": self.R, "predicted": self.predicted,
            "ratio_M": self.ratio_M, "ratio_R": self.ratio_R, "nodes": self.nodes,
        }


CSV_COLUMNS = ("t", "M", "R", "predicted", "ratio_M", "ratio_R", "nodes")


class OrbitTable(NamedTuple):
    """Closed-orbit data grouped by (period n, class-count vector).

    ``fix[n, c]`` is the number of points of Fix^n whose edges fall into the
    weight classes with multiplicities ``c``; ``values[k]`` holds the value of
    each potential on class k.
    """

    fix: dict
    values: np.ndarray  # (K, number of potentials)
    nodes: int

    def sums(self, c: tuple) -> np.ndarray:
        return np.array([math.fsum(ci * v for ci, v in zip(c, col)) for col in self.values.T])

    def primitive(self) -> dict:
        prim = {}
        for (n, c) in self.fix:
            g = math.gcd(n, *c)
            total = 0
            for k in range(1, g + 1):
                if g % k == 0:
                    mu = mobius(k)
                    if mu:
                        total += mu * self.fix.get((n // k, tuple(ci // k for ci in c)), 0)
            prim[n, c] = total
        return prim


def _edge_classes(shift: TruncatedShift, pots: Sequence[Potential]):
    k = shift.size
    cls = np.full((k, k), -1, dtype=np.int64)
    table: dict[tuple, int] = {}
    letters = shift.letters
    for i in range(k):
        for j in shift.successors_idx(i).tolist():
            key = tuple(p.value((letters[i], letters[j])[: p.locally_constant_depth]) for p in pots)
            cls[i, j] = table.setdefault(key, len(table))
    values = np.array(list(table.keys()), dtype=float).reshape(len(table), len(pots))
    return cls, values


def orbit_table(
    shift: TruncatedShift,
    pots: Sequence[Potential],
    t_max: float,
    node_limit: int = DEFAULT_NODE_LIMIT,
    n_limit: int = 400,
) -> OrbitTable:
    """Exact closed-orbit table for potentials of locally constant depth <= 2.

    The first potential must be strictly positive; it sets the threshold.
    Paths are aggregated by (first letter, last letter, class counts), so the
    work grows with the number of distinct Birkhoff sums rather than words.
    """
    if any(p.locally_constant_depth is None or p.locally_constant_depth > 2 for p in pots):
        raise InvalidInput("orbit_table needs potentials of locally constant depth <= 2")
    cls, values = _edge_classes(shift, pots)
    fvals = values[:, 0]
    if fvals.min() <= 0:
        raise InvalidInput("the counting potential must be strictly positive (regularize first)")
    n_max = int(math.floor(t_max / fvals.min())) + 1
    if n_max > n_limit:
        raise CutoffTooSmall(f"n_max = {n_max} exceeds the enumeration limit {n_limit}")
    K = len(values)
    fmin = float(fvals.min())
    unit = [tuple(1 if i == k else 0 for i in range(K)) for k in range(K)]
    zero = (0,) * K
    level = {(i, i, zero): 1 for i in range(shift.size)}
    fix: dict = defaultdict(int)
    nodes = 0
    sum_cache: dict = {}

    def s_f(c):
        v = sum_cache.get(c)
        if v is None:
            v = math.fsum(ci * fv for ci, fv in zip(c, fvals))
            sum_cache[c] = v
        return v

    for n in range(1, n_max + 1):
        nxt: dict = defaultdict(int)
        for (first, last, c), cnt in level.items():
            nodes += 1
            e = cls[last, first]
            if e >= 0:
                cc = tuple(a + b for a, b in zip(c, unit[e]))
                if s_f(cc) <= t_max:
                    fix[n, cc] += cnt
            if n == n_max:
                continue
            for j in shift.successors_idx(last).tolist():
                cc = tuple(a + b for a, b in zip(c, unit[cls[last, j]]))
                if s_f(cc) + fmin <= t_max:
                    nxt[first, j, cc] += cnt
        if nodes > node_limit:
            raise BudgetExplosion(node_limit, float(sum(fix.values())))
        level = nxt
        if not level:
            break
    return OrbitTable(dict(fix), values, nodes)


def _word_table(f: Potential, shift: TruncatedShift, t_max: float, node_limit: int, n_limit: int = 60):
    """Closed orbits of a general positive potential by explicit word search.

    Returns ``[(n, S_n f, primitive)]`` for every point of Fix^n with
    ``S_n f <= t_max``, plus the node count.
    """
    lower = np.array([lb.lower for lb in all_letter_bounds(f, shift, depth=1)])
    if lower.min() <= 0:
        raise InvalidInput("the counting potential must be strictly positive (regularize first)")
    lmin = float(lower.min())
    n_max = int(math.floor(t_max / lmin)) + 1
    if n_max > n_limit:
        raise CutoffTooSmall(f"n_max = {n_max} exceeds the enumeration limit {n_limit}")
    out = []
    nodes = 0
    stack = [((i,), float(lower[i])) for i in reversed(range(shift.size))]
    while stack:
        w, lo = stack.pop()
        nodes += 1
        if nodes > node_limit:
            raise BudgetExplosion(node_limit, float(len(out)))
        if shift.allowed_idx(w[-1], w[0]):
            pd = f.point_depth(len(w) + 1)
            s, _ = eval_birkhoff(f, shift.from_idx(w), depth=pd, cyclic=True)
            if s <= t_max:
                out.append((len(w), s, smallest_period(w) == len(w)))
        if len(w) >= n_max:
            continue
        for j in reversed(shift.successors_idx(w[-1]).tolist()):
            if lo + lower[j] <= t_max:
                stack.append((w + (j,), lo + float(lower[j])))
    return out, nodes


def _predicted(t: float, delta: float) -> float:
    x = t * delta
    return math.exp(x) / x if x > 0 else math.nan


def count_orbits(
    f: Potential,
    shift: TruncatedShift,
    t_grid: Iterable[float],
    delta: float,
    node_limit: int = DEFAULT_NODE_LIMIT,
    n_limit: int = 400,
) -> list[CountRecord]:
    """``M_f(t)`` and ``R_f(t)`` on a grid, with the ratio to ``e^{t delta}/(t delta)``.

    ``M`` is an exact rational and ``R`` an exact integer count of prime
    orbits (primitivity through Möbius inversion over class counts, or the
    smallest-period test in the word search).
    """
    ts = sorted(float(t) for t in t_grid)
    if not ts:
        return []
    t_max = ts[-1]
    records = []
    if f.locally_constant_depth is not None and f.locally_constant_depth <= 2:
        table = orbit_table(shift, [f], t_max, node_limit, n_limit)
        prim = table.primitive()
        items = [(n, table.sums(c)[0], cnt, prim[n, c]) for (n, c), cnt in table.fix.items()]
        nodes = table.nodes
        for t in ts:
            M = sum((Fraction(cnt, n) for n, s, cnt, _ in items if s <= t), Fraction(0))
            R_frac = sum((Fraction(p, n) for n, s, _, p in items if s <= t), Fraction(0))
            records.append(_record(t, M, R_frac, delta, nodes))
    else:
        words, nodes = _word_table(f, shift, t_max, node_limit, min(n_limit, 60))
        for t in ts:
            M = sum((Fraction(1, n) for n, s, _ in words if s <= t), Fraction(0))
            R_frac = sum((Fraction(1, n) for n, s, p in words if s <= t and p), Fraction(0))
            records.append(_record(t, M, R_frac, delta, nodes))
    return records


def _record(t, M, R_frac, delta, nodes) -> CountRecord:
    if R_frac.denominator != 1:
        raise AssertionError("prime orbit count is not an integer")
    pred = _predicted(t, delta)
    R = int(R_frac)
    return CountRecord(t, M, R, pred, float(M) / pred, R / pred, nodes)


def sandwich_holds(records: Sequence[CountRecord], f: Potential, shift: TruncatedShift, delta: float) -> list[bool]:
    """``M(t) - M(t/2) <= R(t) <= M(t)`` in exact arithmetic at every record."""
    halves = {r.t: r for r in count_orbits(f, shift, [r.t / 2 for r in records], delta)}
    return [r.M - halves[r.t / 2].M <= r.R <= r.M for r in records]


def bowen_estimates(records: Sequence[CountRecord]) -> list[float]:
    """``(1/t) log #prime orbits(t)``, which tends to delta."""
    return [math.log(r.R) / r.t if r.R > 0 else math.nan for r in records]


# equidistribution


def equidistribution_ratio(
    f: Potential,
    g: Potential,
    shift: TruncatedShift,
    t: float,
    delta: float,
    depth: int = 1,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> tuple[float, float]:
    """Weighted orbit sum ``sum_n (1/n) sum_{Fix^n, S_n f <= t} S_n g / S_n f`` and its prediction.

    The prediction is ``(int g / int f) e^{t delta} / (t delta)`` under the
    equilibrium state of ``-delta f``.
    """
    if g is f:
        lhs = float(count_orbits(f, shift, [t], delta, node_limit)[0].M)
        return lhs, _predicted(t, delta)
    table = orbit_table(shift, [f, g], t, node_limit)
    terms = []
    for (n, c), cnt in table.fix.items():
        sf, sg = table.sums(c)
        if sf <= t:
            terms.append(cnt * sg / sf / n)
    lhs = math.fsum(terms)
    op = build_transfer(shift, f, depth)
    eq = spectral_pressure(op.scaled(-delta))
    factor = eq.integrate(g) / eq.integrate(f)
    return lhs, factor * _predicted(t, delta)


# sample-point bijection


@dataclass
class BijectionReport:
    k: int
    n: int
    t: float
    epsilon: float
    bijective: bool
    max_discrepancy: float
    discrepancy_ok: bool
    lower_sum: int
    count: int
    upper_sum: int
    sandwich_ok: bool
    per_cylinder: list = field(default_factory=list)


def validate_sample_bijection(f: Potential, shift: TruncatedShift, k: int, n: int, t: float) -> BijectionReport:
    """Check the bijection between Fix^n in a k-cylinder p and n-th preimages of its sample point.

    The map sends the periodic point of a cyclic word w to ``w z_p``.  Reports
    bijectivity, the largest Birkhoff discrepancy against
    ``eps_k = A sum_{l>=k} e^{-alpha l}``, and the counting sandwich
    ``sum_p W(n,p,t-eps) <= #{Fix^n : S_n f <= t} <= sum_p W(n,p,t+eps)``.
    """
    if n < k:
        raise InvalidInput("need n >= k")
    eps = f.A * math.exp(-f.alpha * k) / -math.expm1(-f.alpha)
    depth = f.point_depth(n + 1)
    rows = fix_array(shift, n)
    cyl = {}
    for row in rows.tolist():
        cyl.setdefault(tuple(row[:k]), []).append(tuple(row))
    letters = shift.letters
    all_ok = True
    worst = 0.0
    per = []
    lower_sum = upper_sum = 0
    count = 0
    radius_total = 0.0
    for p in sorted(set(tuple(w) for w in _admissible_words(shift, k))):
        z = sample_point(shift, p, n + depth + 8)
        fixed = cyl.get(p, [])
        pre = [u for u in _admissible_words(shift, n, start=p) if shift.allowed_idx(u[-1], z[0])]
        image = {w: w + z for w in fixed}
        bij = len(set(image.values())) == len(fixed) == len(pre) and {w for w in fixed} == set(pre)
        all_ok &= bij
        s_fix, s_pre = [], []
        for w in fixed:
            a, ra = eval_birkhoff(f, shift.from_idx(w), depth=depth, cyclic=True)
            b, rb = eval_birkhoff(f, shift.from_idx(w), depth=depth, cyclic=False,
                                  continuation=shift.from_idx(z))
            worst = max(worst, abs(a - b))
            radius_total = max(radius_total, ra + rb)
            s_fix.append(a)
        for u in pre:
            b, _ = eval_birkhoff(f, shift.from_idx(u), depth=depth, cyclic=False, continuation=shift.from_idx(z))
            s_pre.append(b)
        count += sum(1 for s in s_fix if s <= t)
        slack = eps + radius_total
        lower_sum += sum(1 for s in s_pre if s <= t - slack)
        upper_sum += sum(1 for s in s_pre if s <= t + slack)
        per.append({"cylinder": shift.from_idx(p), "fixed": len(fixed), "preimages": len(pre), "bijective": bij})
    disc_ok = worst <= eps + radius_total + 1e-12
    return BijectionReport(k, n, t, eps, all_ok, worst, disc_ok, lower_sum, count, upper_sum,
                           lower_sum <= count <= upper_sum, per)


def _admissible_words(shift: TruncatedShift, length: int, start: tuple = ()):
    if not start:
        stack = [(i,) for i in reversed(range(shift.size))]
    else:
        stack = [tuple(start)]
    while stack:
        w = stack.pop()
        if len(w) >= length:
            yield w[:length] if len(w) > length else w
            continue
        for j in reversed(shift.successors_idx(w[-1]).tolist()):
            stack.append(w + (j,))
