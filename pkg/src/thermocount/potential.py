"""Locally Hölder potentials evaluated on cylinders with certified radii.

A potential maps a finite prefix ``(x_1, ..., x_m)`` to ``(value, radius)``
such that ``|f(x) - value| <= radius`` for every point ``x`` of the cylinder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .errors import InadmissibleWord, InvalidInput, LetterAbsent, NotEventuallyPositive
from .shift_core import TruncatedShift, Word, fix_array

EvalFn = Callable[[tuple], tuple[float, float]]

# Prefix length used to pin periodic points of potentials that are not
# locally constant.
DEFAULT_POINT_DEPTH = 48


class Potential:
    """Potential with Hölder data ``|f(x)-f(y)| <= A e^{-alpha n}`` on n-cylinders.

    ``locally_constant_depth`` is the prefix length from which evaluation is
    exact, or ``None``.
    """

    def __init__(
        self,
        fn: EvalFn,
        A: float = 0.0,
        alpha: float = 1.0,
        locally_constant_depth: int | None = None,
        name: str = "potential",
    ):
        if A < 0 or alpha <= 0:
            raise InvalidInput("Hölder constants need A >= 0 and alpha > 0")
        self._fn = fn
        self.A = float(A)
        self.alpha = float(alpha)
        self.locally_constant_depth = locally_constant_depth
        self.name = name

    def __repr__(self) -> str:
        return f"Potential({self.name})"

    def eval(self, prefix: Sequence) -> tuple[float, float]:
        prefix = tuple(prefix)
        if not prefix:
            raise InvalidInput("cannot evaluate a potential on the empty prefix")
        value, radius = self._fn(prefix)
        return float(value), float(radius)

    def value(self, prefix: Sequence) -> float:
        return self.eval(prefix)[0]

    def holder_radius(self, m: int) -> float:
        lcd = self.locally_constant_depth
        if lcd is not None and m >= lcd:
            return 0.0
        return self.A * math.exp(-self.alpha * m)

    def point_depth(self, minimum: int = 1) -> int:
        """Prefix length used when a point (not a cylinder) must be pinned."""
        lcd = self.locally_constant_depth
        return max(minimum, lcd if lcd is not None else DEFAULT_POINT_DEPTH)

    # linear structure
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = constant(other)
        return linear_combination([(1.0, self), (1.0, other)])

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = constant(other)
        return linear_combination([(1.0, self), (-1.0, other)])

    def __mul__(self, c: float):
        return linear_combination([(float(c), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return linear_combination([(-1.0, self)])

    @property
    def terms(self) -> list[tuple[float, "Potential"]]:
        return [(1.0, self)]


class LinearPotential(Potential):
    def __init__(self, terms: list[tuple[float, Potential]]):
        self._terms = terms

        def fn(prefix):
            v = r = 0.0
            for c, p in terms:
                pv, pr = p.eval(prefix)
                v += c * pv
                r += abs(c) * pr
            return v, r

        depths = [p.locally_constant_depth for _, p in terms]
        lcd = None if any(d is None for d in depths) else max(depths, default=1)
        A = sum(abs(c) * p.A for c, p in terms)
        alpha = min((p.alpha for _, p in terms), default=1.0)
        name = " + ".join(f"{c:g}*{p.name}" for c, p in terms)
        super().__init__(fn, A, alpha, lcd, name)

    @property
    def terms(self):
        return list(self._terms)


def linear_combination(pairs: Iterable[tuple[float, Potential]]) -> Potential:
    """Flattened linear combination; coefficients of repeated potentials merge."""
    merged: dict[int, list] = {}
    for c, p in pairs:
        for c2, q in p.terms:
            slot = merged.setdefault(id(q), [0.0, q])
            slot[0] += c * c2
    return LinearPotential([(c, q) for c, q in merged.values()])


# families


def constant(c: float) -> Potential:
    c = float(c)
    return Potential(lambda prefix: (c, 0.0), 0.0, 1.0, 1, name=f"const({c:g})")


def letter_potential(values: Mapping, name: str = "letter potential") -> Potential:
    """Potential depending on the first letter only."""
    table = {a: float(v) for a, v in values.items()}

    def fn(prefix):
        try:
            return table[prefix[0]], 0.0
        except KeyError:
            raise LetterAbsent(f"no value for letter {prefix[0]!r}") from None

    pot = Potential(fn, 0.0, 1.0, 1, name)
    pot.letter_table = table
    return pot


def pair_potential(values: Mapping, name: str = "pair potential") -> Potential:
    """Potential depending on the first two letters.

    On a one-letter prefix the value is the midpoint of the table entries
    starting with that letter.
    """
    table = {tuple(k): float(v) for k, v in values.items()}
    by_first: dict = {}
    for (a, _), v in table.items():
        by_first.setdefault(a, []).append(v)

    def fn(prefix):
        if len(prefix) >= 2:
            try:
                return table[prefix[0], prefix[1]], 0.0
            except KeyError:
                raise LetterAbsent(f"no value for pair {prefix[:2]!r}") from None
        vals = by_first.get(prefix[0])
        if not vals:
            raise LetterAbsent(f"no value for letter {prefix[0]!r}")
        lo, hi = min(vals), max(vals)
        return (lo + hi) / 2, (hi - lo) / 2

    spread = max((max(v) - min(v) for v in by_first.values()), default=0.0)
    return Potential(fn, spread * math.e, 1.0, 2, name)


def log_letter(coeff: float = 2.0, offset: float = 1.0) -> Potential:
    """``coeff * log(x_1 + offset)`` on positive integer letters."""

    def fn(prefix):
        return coeff * math.log(prefix[0] + offset), 0.0

    return Potential(fn, 0.0, 1.0, 1, name=f"{coeff:g}*log(x1+{offset:g})")


def geometric_indicator(letter, ratio: float = 0.5) -> Potential:
    """``sum_{i>=1} ratio^i [x_i = letter]``, Hölder but not locally constant."""
    if not 0 < ratio < 1:
        raise InvalidInput("ratio must lie in (0, 1)")

    def fn(prefix):
        partial = sum(ratio ** (i + 1) for i, a in enumerate(prefix) if a == letter)
        tail = ratio ** (len(prefix) + 1) / (1 - ratio)
        return partial + tail / 2, tail / 2

    return Potential(fn, ratio / (1 - ratio), -math.log(ratio), None, name=f"geom({letter!r},{ratio:g})")


def shifted(h: Potential) -> Potential:
    """``h o sigma``."""

    def fn(prefix):
        if len(prefix) < 2:
            return 0.0, math.inf
        return h.eval(prefix[1:])

    lcd = None if h.locally_constant_depth is None else h.locally_constant_depth + 1
    return Potential(fn, h.A * math.exp(h.alpha), h.alpha, lcd, name=f"{h.name}∘σ")


def coboundary(h: Potential) -> Potential:
    """``h - h o sigma``; its periodic Birkhoff sums vanish."""
    return h - shifted(h)


# evaluation


def _letters(word) -> tuple:
    if isinstance(word, Word):
        if not word.admissible:
            raise InadmissibleWord(f"{word.letters!r} is flagged inadmissible")
        return word.letters
    return tuple(word)


def eval_birkhoff(
    f: Potential,
    word,
    depth: int | None = None,
    shift: TruncatedShift | None = None,
    cyclic: bool = True,
    continuation: Sequence | None = None,
) -> tuple[float, float]:
    """Birkhoff sum ``S_n f`` over a word of length n.

    For cyclic words the point is the periodic extension; otherwise the word
    is followed by ``continuation`` or the least admissible extension in
    ``shift``.  Each term is evaluated on a prefix of length ``depth``.
    Returns the value and the summed radii.
    """
    letters = _letters(word)
    n = len(letters)
    if n == 0:
        raise InadmissibleWord("empty word")
    if shift is not None and not shift.is_admissible(letters, cyclic=cyclic):
        raise InadmissibleWord(f"{letters!r} is not admissible")
    depth = f.point_depth() if depth is None else max(1, depth)
    need = n - 1 + depth
    if cyclic:
        reps = -(-need // n)
        point = letters * reps
    else:
        if continuation is not None:
            point = letters + tuple(continuation)
        elif shift is not None:
            point = shift.from_idx(shift.least_extension_idx(shift.to_idx(letters), need))
        else:
            point = letters
    value = err = 0.0
    for i in range(n):
        v, r = f.eval(point[i:i + depth])
        value += v
        err += r
    return value, err


def periodic_sum(f: Potential, idx_word: Sequence[int], shift: TruncatedShift, depth: int | None = None):
    """``S_n f`` at the periodic point of an index word; returns (value, radius)."""
    return eval_birkhoff(f, shift.from_idx(idx_word), depth=depth, cyclic=True)


class LetterBounds(NamedTuple):
    letter: object
    lower: float
    upper: float
    certificate_depth: int


def letter_bounds(f: Potential, a, shift: TruncatedShift, depth: int = 1) -> LetterBounds:
    """Certified lower/upper bounds of ``f`` on the 1-cylinder ``[a]``.

    All admissible words of length ``depth`` starting with ``a`` are
    exhausted; each contributes ``value -/+ radius``.
    """
    if a not in shift.index:
        raise LetterAbsent(f"letter {a!r} not in truncation")
    lcd = f.locally_constant_depth
    d = lcd if lcd is not None else max(1, depth)
    lo, hi = math.inf, -math.inf
    for word in _words_from(shift, shift.index[a], d):
        v, r = f.eval(shift.from_idx(word))
        lo = min(lo, v - r)
        hi = max(hi, v + r)
    return LetterBounds(a, lo, hi, d)


def _words_from(shift: TruncatedShift, first: int, length: int):
    stack = [(first,)]
    while stack:
        w = stack.pop()
        if len(w) == length:
            yield w
            continue
        for b in reversed(shift.successors_idx(w[-1]).tolist()):
            stack.append(w + (b,))


def all_letter_bounds(f: Potential, shift: TruncatedShift, depth: int = 1) -> list[LetterBounds]:
    return [letter_bounds(f, a, shift, depth) for a in shift.letters]


# regularization


@dataclass(frozen=True)
class RegularizationData:
    N: int
    B: float
    R: float
    level: float  # R*N + B
    finite_set: frozenset
    T: float

    @property
    def closeness_bound(self) -> float:
        return 2 * (self.level + self.T)


def regularize(f: Potential, N: int, B: float, shift: TruncatedShift, depth: int = 1) -> Potential:
    """Strictly positive potential with the same periodic Birkhoff sums as ``f``.

    With ``R = |inf f|`` and ``F = {a : I(f,a) <= RN+B}`` the result is
    ``C_N f / N + (f - (RN+B)) 1[x_1 not in F]`` where ``C_N f`` is the
    N-step Birkhoff sum with every term at a letter outside ``F`` replaced by
    ``RN+B``.  It is ``>= B/N`` and within ``2(RN+B+T)`` of ``f``, ``T`` being
    the sup of ``f`` over ``F``-cylinders.  ``F`` is computed from certified
    lower bounds, so borderline letters are included.
    """
    if N < 1:
        raise InvalidInput("N must be >= 1")
    pd = f.point_depth(N + 1)
    for row in fix_array(shift, N).tolist():
        v, r = periodic_sum(f, row, shift, depth=pd)
        if v + r < B:
            raise NotEventuallyPositive(
                f"cyclic word {shift.from_idx(row)!r} has S_{N} f = {v:.6g} < B = {B:g}"
            )
    bounds = {lb.letter: lb for lb in all_letter_bounds(f, shift, depth)}
    R = abs(min(lb.lower for lb in bounds.values()))
    level = R * N + B
    F = frozenset(a for a, lb in bounds.items() if lb.lower <= level)
    T = max((bounds[a].upper for a in F), default=-math.inf)
    data = RegularizationData(N, float(B), R, level, F, T)

    def core(prefix):
        v = r = 0.0
        for i in range(N):
            if prefix[i] in F:
                fv, fr = f.eval(prefix[i:])
                v += fv / N
                r += fr / N
            else:
                v += level / N
        if prefix[0] not in F:
            fv, fr = f.eval(prefix)
            v += fv - level
            r += fr
        return v, r

    def fn(prefix):
        if len(prefix) >= N:
            return core(prefix)
        lo, hi = math.inf, -math.inf
        start = shift.to_idx(prefix)
        for ext in _extensions(shift, start, N):
            v, r = core(shift.from_idx(ext))
            lo, hi = min(lo, v - r), max(hi, v + r)
        return (lo + hi) / 2, (hi - lo) / 2

    lcd = None if f.locally_constant_depth is None else f.locally_constant_depth + N - 1
    A = f.A * (1 + sum(math.exp(f.alpha * i) for i in range(N)) / N)
    g = Potential(fn, A, f.alpha, lcd, name=f"reg({f.name},N={N},B={B:g})")
    g.regularization = data
    return g


def _extensions(shift: TruncatedShift, prefix_idx: tuple, length: int):
    stack = [tuple(prefix_idx)]
    while stack:
        w = stack.pop()
        if len(w) >= length:
            yield w
            continue
        for b in shift.successors_idx(w[-1]).tolist():
            stack.append(w + (b,))


def suggest_regularization(f: Potential, shift: TruncatedShift, n_max: int = 8) -> tuple[int, float]:
    """Smallest N <= n_max with every cyclic S_n f (N <= n <= n_max) positive.

    B is half the smallest such sum.  Only cyclic words are scanned, so the
    suggestion is a heuristic for the eventual positivity the caller asserts.
    """
    minima = []
    for n in range(1, n_max + 1):
        pd = f.point_depth(n + 1)
        minima.append(min(periodic_sum(f, row, shift, depth=pd)[0] for row in fix_array(shift, n).tolist()))
    for N in range(1, n_max + 1):
        tail = minima[N - 1:]
        if min(tail) > 0:
            return N, min(tail) / 2
    raise NotEventuallyPositive(f"some cyclic Birkhoff sum is <= 0 for every n <= {n_max}")


# period tests


class LivsicReport(NamedTuple):
    cohomologous_up_to_tol: bool
    worst_violation: float
    worst_word: tuple | None


def livsic_test(f: Potential, g: Potential, shift: TruncatedShift, n_max: int, tol: float = 1e-9) -> LivsicReport:
    """Compare periodic Birkhoff sums of ``f`` and ``g`` on Fix^n, n <= n_max."""
    if n_max < 1:
        raise InvalidInput("n_max must be >= 1")
    ok = True
    worst, worst_word = 0.0, None
    for n in range(1, n_max + 1):
        fd, gd = f.point_depth(n + 1), g.point_depth(n + 1)
        for row in fix_array(shift, n).tolist():
            fv, fr = periodic_sum(f, row, shift, depth=fd)
            gv, gr = periodic_sum(g, row, shift, depth=gd)
            diff = abs(fv - gv)
            if diff > tol + fr + gr:
                ok = False
            if diff > worst:
                worst, worst_word = diff, shift.from_idx(row)
    return LivsicReport(ok, worst, worst_word)


@dataclass(frozen=True)
class ArithmeticSuspected:
    generator: float
    kind: str = "arithmetic_suspected"


@dataclass(frozen=True)
class NonArithmetic:
    witness: tuple[float, float]
    kind: str = "non_arithmetic"


def periods(f: Potential, shift: TruncatedShift, n_max: int) -> list[float]:
    out = []
    for n in range(1, n_max + 1):
        pd = f.point_depth(n + 1)
        out.extend(periodic_sum(f, row, shift, depth=pd)[0] for row in fix_array(shift, n).tolist())
    return out


def arithmetic_test(f: Potential, shift: TruncatedShift, n_max: int = 4, tol: float = 1e-9):
    """Heuristic test whether the periods of ``f`` generate a cyclic group.

    Every period is divided by the smallest nonzero one and matched to a
    fraction with denominator at most ``tol**-1/4``.  A ratio that no such
    fraction matches within ``tol`` is reported as a witness of
    non-arithmeticity.  This is evidence, not a proof.
    """
    if n_max < 2:
        raise InvalidInput("n_max must be >= 2")
    vals = sorted({round(abs(p), 12) for p in periods(f, shift, n_max) if abs(p) > tol})
    if not vals:
        return ArithmeticSuspected(0.0)
    p0 = vals[0]
    max_den = max(1, int(tol ** -0.25))
    fracs = []
    for p in vals:
        ratio = p / p0
        q = Fraction(ratio).limit_denominator(max_den)
        if abs(ratio - float(q)) > tol * max(1.0, ratio):
            return NonArithmetic((p0, p))
        fracs.append(q)
    lcm = reduce(lambda x, y: x * y // math.gcd(x, y), (q.denominator for q in fracs), 1)
    g = reduce(math.gcd, (int(q * lcm) for q in fracs))
    return ArithmeticSuspected(p0 * g / lcm)
