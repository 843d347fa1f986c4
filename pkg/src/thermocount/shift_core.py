"""Markov shifts, finite truncations, admissible words and periodic points.

Letters are opaque hashable ids.  A :class:`TruncatedShift` fixes an order on
its letters; every "lexicographic" statement in the package refers to that
order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import islice
from math import gcd
from typing import Callable, Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import Disconnected, EmptyTruncation, InadmissibleWord, InvalidInput

Letter = Hashable

# Materializing a dense transition matrix beyond this many entries is refused;
# full shifts are handled structurally instead.
DENSE_LIMIT = 25_000_000


@dataclass(frozen=True, eq=False)
class ShiftSpec:
    """A one-sided Markov shift on a finite or countable alphabet.

    ``letters`` is ``None`` for the countable alphabet {1, 2, 3, ...}.
    ``allowed`` is the transition predicate; ``full`` marks the full shift so
    that large truncations never evaluate it pairwise.  ``block_matrix`` is an
    optional vectorized builder ``letters -> 0/1 array`` used when present.
    """

    allowed: Callable[[Letter, Letter], bool]
    letters: tuple | None = None
    full: bool = False
    weight_hint: Callable[[Letter], float] | Mapping | None = None
    block_matrix: Callable[[Sequence[Letter]], np.ndarray] | None = None
    name: str = ""

    @property
    def countable(self) -> bool:
        return self.letters is None

    def iter_letters(self) -> Iterator[Letter]:
        if self.letters is not None:
            yield from self.letters
        else:
            n = 1
            while True:
                yield n
                n += 1

    def weight(self, a: Letter) -> float:
        if self.weight_hint is None:
            raise InvalidInput("shift has no letter weight hint")
        if callable(self.weight_hint):
            return float(self.weight_hint(a))
        return float(self.weight_hint[a])


def full_shift(letters: Sequence[Letter] | None = None, name: str = "", weight_hint=None) -> ShiftSpec:
    """Full shift on ``letters`` (countable {1, 2, ...} when ``None``)."""
    letters = None if letters is None else tuple(letters)
    label = name or ("full shift on N" if letters is None else f"full {len(letters)}-shift")
    return ShiftSpec(lambda a, b: True, letters, full=True, weight_hint=weight_hint, name=label)


def matrix_shift(letters: Sequence[Letter], matrix, name: str = "") -> ShiftSpec:
    letters = tuple(letters)
    mat = np.asarray(matrix, dtype=np.int64)
    if mat.shape != (len(letters), len(letters)):
        raise InvalidInput(f"transition matrix has shape {mat.shape}, expected {(len(letters),) * 2}")
    if not np.isin(mat, (0, 1)).all():
        raise InvalidInput("transition matrix entries must be 0 or 1")
    pos = {a: i for i, a in enumerate(letters)}
    frozen = mat.astype(np.uint8)
    return ShiftSpec(
        lambda a, b: bool(frozen[pos[a], pos[b]]),
        letters,
        full=bool(frozen.all()),
        name=name or "matrix shift",
    )


def forbidden_pairs_shift(letters: Sequence[Letter], forbidden: Iterable[tuple], name: str = "") -> ShiftSpec:
    """Shift on ``letters`` whose only constraints are forbidden two-letter words."""
    bad = frozenset(tuple(p) for p in forbidden)
    letters = tuple(letters)
    return ShiftSpec(lambda a, b: (a, b) not in bad, letters, full=not bad, name=name or "forbidden-pairs shift")


def no_aa_shift() -> ShiftSpec:
    """The golden-mean shift on {a, b}: the word ``aa`` is forbidden."""
    return forbidden_pairs_shift("ab", [("a", "a")], name="no-aa shift")


class FirstK(NamedTuple):
    k: int


class WeightBelow(NamedTuple):
    w: float
    patience: int = 1000
    max_letters: int = 10_000_000


@dataclass(frozen=True, eq=False)
class TruncatedShift:
    """Finite sub-alphabet with its restricted transition structure."""

    letters: tuple
    full: bool
    cutoff_note: dict = field(default_factory=dict)
    spec: ShiftSpec | None = None
    _matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "index", {a: i for i, a in enumerate(self.letters)})

    @property
    def size(self) -> int:
        return len(self.letters)

    @property
    def countable(self) -> bool:
        return bool(self.cutoff_note.get("countable", False))

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            k = self.size
            if k * k > DENSE_LIMIT:
                raise InvalidInput(f"refusing to materialize a dense {k}x{k} matrix")
            object.__setattr__(self, "_matrix", np.ones((k, k), dtype=np.uint8))
        return self._matrix

    def allowed(self, a: Letter, b: Letter) -> bool:
        if self.full:
            return True
        return bool(self.matrix[self.index[a], self.index[b]])

    def allowed_idx(self, i: int, j: int) -> bool:
        return True if self.full else bool(self.matrix[i, j])

    def successors_idx(self, i: int) -> np.ndarray:
        if self.full:
            return np.arange(self.size)
        return self._succ[i]

    def predecessors_idx(self, j: int) -> np.ndarray:
        if self.full:
            return np.arange(self.size)
        return self._pred[j]

    @property
    def _succ(self):
        cache = self.__dict__.get("_succ_cache")
        if cache is None:
            cache = [np.flatnonzero(row) for row in self.matrix]
            object.__setattr__(self, "_succ_cache", cache)
        return cache

    @property
    def _pred(self):
        cache = self.__dict__.get("_pred_cache")
        if cache is None:
            cache = [np.flatnonzero(col) for col in self.matrix.T]
            object.__setattr__(self, "_pred_cache", cache)
        return cache

    def to_idx(self, word: Iterable[Letter]) -> tuple[int, ...]:
        try:
            return tuple(self.index[a] for a in word)
        except KeyError as exc:
            raise InadmissibleWord(f"letter {exc.args[0]!r} not in truncation") from None

    def from_idx(self, idx: Iterable[int]) -> tuple:
        return tuple(self.letters[i] for i in idx)

    def is_admissible(self, word: Sequence[Letter], cyclic: bool = False) -> bool:
        if not word or any(a not in self.index for a in word):
            return False
        if self.full:
            return True
        idx = self.to_idx(word)
        ok = all(self.matrix[i, j] for i, j in zip(idx, idx[1:]))
        return ok and (not cyclic or bool(self.matrix[idx[-1], idx[0]]))

    def least_extension_idx(self, prefix_idx: Sequence[int], length: int) -> tuple[int, ...]:
        """Greedy least-letter continuation of ``prefix_idx`` up to ``length`` letters.

        Since every letter has a successor, the greedy choice gives the
        lexicographically least infinite extension.
        """
        out = list(prefix_idx)
        while len(out) < length:
            out.append(int(self.successors_idx(out[-1])[0]))
        return tuple(out)

    def aperiodic_extension_idx(self, prefix_idx: Sequence[int], length: int) -> tuple[int, ...]:
        """Deterministic aperiodic continuation of ``prefix_idx``.

        Follows the least successor, switching to the second least one at the
        triangular positions 1, 3, 6, 10, ... of the continuation.  The growing
        gaps between switches rule out eventual periodicity whenever a second
        successor is available often enough; callers verify this.
        """
        out = list(prefix_idx)
        step, next_switch, gap = 0, 1, 2
        while len(out) < length:
            succ = self.successors_idx(out[-1])
            step += 1
            if step == next_switch and len(succ) > 1:
                out.append(int(succ[1]))
            else:
                out.append(int(succ[0]))
            if step == next_switch:
                next_switch += gap
                gap += 1
        return tuple(out)


def _prune(letters: list, mat: np.ndarray) -> tuple[list, np.ndarray, list]:
    keep = np.ones(len(letters), dtype=bool)
    while True:
        sub = mat[np.ix_(keep, keep)]
        dead = (sub.sum(axis=1) == 0) | (sub.sum(axis=0) == 0)
        if not dead.any():
            break
        keep[np.flatnonzero(keep)[dead]] = False
        if not keep.any():
            break
    dropped = [a for a, k in zip(letters, keep) if not k]
    return [a for a, k in zip(letters, keep) if k], mat[np.ix_(keep, keep)], dropped


def build_truncation(spec: ShiftSpec, rule: FirstK | WeightBelow) -> TruncatedShift:
    """Restrict ``spec`` to a finite letter set chosen by ``rule``.

    Letters without a successor or predecessor inside the set are pruned
    repeatedly; the dropped letters are recorded in ``cutoff_note``.
    """
    if isinstance(rule, FirstK):
        if rule.k < 1:
            raise EmptyTruncation("first_k needs k >= 1")
        letters = list(islice(spec.iter_letters(), rule.k))
        note = {"rule": "first_k", "k": rule.k}
    elif isinstance(rule, WeightBelow):
        letters = []
        misses = 0
        for i, a in enumerate(spec.iter_letters()):
            if spec.weight(a) < rule.w:
                letters.append(a)
                misses = 0
            else:
                misses += 1
            if spec.countable and (misses >= rule.patience or i + 1 >= rule.max_letters):
                break
        note = {"rule": "weight_below", "w": rule.w}
    else:
        raise InvalidInput(f"unknown truncation rule {rule!r}")
    if not letters:
        raise EmptyTruncation("no letter survives the truncation rule")
    note["countable"] = spec.countable
    note["requested"] = len(letters)

    if spec.full:
        note.update(kept=len(letters), dropped=[])
        return TruncatedShift(tuple(letters), True, note, spec)

    if spec.block_matrix is not None:
        mat = np.asarray(spec.block_matrix(letters), dtype=np.uint8)
    else:
        mat = np.array([[1 if spec.allowed(a, b) else 0 for b in letters] for a in letters], dtype=np.uint8)
    kept, mat, dropped = _prune(letters, mat)
    if not kept:
        raise Disconnected("pruning letters without successors or predecessors empties the truncation")
    note.update(kept=len(kept), dropped=dropped)
    return TruncatedShift(tuple(kept), bool(mat.all()), note, spec, mat)


def truncate_finite(spec: ShiftSpec) -> TruncatedShift:
    """Identity truncation of a finite-alphabet shift."""
    if spec.countable:
        raise InvalidInput("countable shifts need an explicit truncation rule")
    return build_truncation(spec, FirstK(len(spec.letters)))


@dataclass(frozen=True)
class Word:
    letters: tuple
    admissible: bool


@dataclass(frozen=True)
class PeriodicOrbit:
    representative: Word
    period: int
    primitive: bool


def make_word(shift: TruncatedShift, letters: Sequence[Letter], cyclic: bool = False) -> Word:
    letters = tuple(letters)
    return Word(letters, shift.is_admissible(letters, cyclic=cyclic))


def least_rotation(seq: Sequence) -> tuple:
    """Lexicographically least rotation (Booth's algorithm)."""
    s = list(seq)
    n = len(s)
    if n == 0:
        return ()
    ss = s + s
    fail = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = ss[j]
        i = fail[j - k - 1]
        while i != -1 and sj != ss[k + i + 1]:
            if sj < ss[k + i + 1]:
                k = j - i - 1
            i = fail[i]
        if sj != ss[k + i + 1]:
            if sj < ss[k]:
                k = j
            fail[j - k] = -1
        else:
            fail[j - k] = i + 1
    return tuple(ss[k:k + n])


def smallest_period(seq: Sequence) -> int:
    """Least p dividing len(seq) with seq a power of seq[:p]."""
    s = tuple(seq)
    n = len(s)
    for p in range(1, n + 1):
        if n % p == 0 and s == s[p:] + s[:p]:
            return p
    return n


def is_primitive(seq: Sequence) -> bool:
    return smallest_period(seq) == len(seq)


def periodic_orbit(shift: TruncatedShift, letters: Sequence[Letter]) -> PeriodicOrbit:
    """Canonical orbit of the periodic point with period word ``letters``."""
    idx = shift.to_idx(letters)
    if not shift.is_admissible(tuple(letters), cyclic=True):
        raise InadmissibleWord(f"{tuple(letters)!r} is not an admissible cyclic word")
    rep = shift.from_idx(least_rotation(idx))
    return PeriodicOrbit(Word(rep, True), len(rep), is_primitive(idx))


def fix_array(shift: TruncatedShift, n: int, first_letter: Letter | None = None) -> np.ndarray:
    """All admissible cyclic words of length ``n`` as rows of letter indices.

    Rows are sorted lexicographically.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    k = shift.size
    dtype = np.uint8 if k <= 256 else (np.uint16 if k <= 65536 else np.int64)
    firsts = np.arange(k) if first_letter is None else np.array([shift.index[first_letter]])
    rows = firsts.astype(dtype)[:, None]
    for _ in range(n - 1):
        last = rows[:, -1].astype(np.int64)
        if shift.full:
            new = np.repeat(rows, k, axis=0)
            col = np.tile(np.arange(k, dtype=dtype), len(rows))
        else:
            mask = shift.matrix[last].astype(bool)
            ri, bi = np.nonzero(mask)
            new = rows[ri]
            col = bi.astype(dtype)
        rows = np.concatenate([new, col[:, None]], axis=1)
    if not shift.full:
        close = shift.matrix[rows[:, -1].astype(np.int64), rows[:, 0].astype(np.int64)].astype(bool)
        rows = rows[close]
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def enumerate_fix(shift: TruncatedShift, n: int, first_letter: Letter | None = None) -> list[Word]:
    """Admissible cyclic words of length ``n`` (points of Fix^n) in lexicographic order."""
    if first_letter is not None and first_letter not in shift.index:
        return []
    return [Word(shift.from_idx(row), True) for row in fix_array(shift, n, first_letter).tolist()]


def count_fix_trace(shift: TruncatedShift, n: int) -> int:
    """trace(T^n) in exact integer arithmetic."""
    if shift.full:
        return shift.size ** n
    t = np.array(shift.matrix, dtype=object)
    p = np.identity(shift.size, dtype=object)
    for _ in range(n):
        p = p.dot(t)
    return int(np.trace(p))


def mobius(n: int) -> int:
    if n < 1:
        raise ValueError("mobius needs n >= 1")
    result, m, p = 1, n, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    return -result if m > 1 else result


def divisors(n: int) -> list[int]:
    small = [d for d in range(1, int(n ** 0.5) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


class BipReport(NamedTuple):
    bip_witness: tuple | None
    mixing: bool
    period: int


def _graph_period(mat: np.ndarray) -> tuple[bool, int]:
    graph = csr_matrix(mat)
    ncomp, _ = connected_components(graph, directed=True, connection="strong")
    order, pred = breadth_first_order(graph, 0, directed=True, return_predecessors=True)
    level = np.full(mat.shape[0], -1)
    level[0] = 0
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    g = 0
    rows, cols = np.nonzero(mat)
    for u, v in zip(rows, cols):
        if level[u] >= 0 and level[v] >= 0:
            g = gcd(g, int(level[u] + 1 - level[v]))
    return ncomp == 1, abs(g)


def check_bip_mixing(shift: TruncatedShift) -> BipReport:
    """(BIP) witness, topological mixing and period of the truncation."""
    if shift.full:
        return BipReport((shift.letters[0],), True, 1)
    mat = shift.matrix
    k = shift.size
    if (mat.sum(axis=0) == 0).any() or (mat.sum(axis=1) == 0).any():
        witness = None
    else:
        # greedy set cover of the "has a predecessor in B" and "has a successor in B" needs
        need_in = np.ones(k, dtype=bool)
        need_out = np.ones(k, dtype=bool)
        chosen: list[int] = []
        while need_in.any() or need_out.any():
            gain = mat[:, need_in].sum(axis=1) + mat.T[:, need_out].sum(axis=1)
            b = int(np.argmax(gain))
            chosen.append(b)
            need_in &= ~mat[b].astype(bool)
            need_out &= ~mat[:, b].astype(bool)
        witness = tuple(shift.letters[i] for i in sorted(chosen))
    irreducible, period = _graph_period(mat)
    if not irreducible:
        return BipReport(witness, False, 0)
    return BipReport(witness, period == 1, period)
