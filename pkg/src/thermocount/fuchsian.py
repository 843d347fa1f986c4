"""Fuchsian groups with cusps, their countable codings, and roof functions.

Boundary points of the hyperbolic plane are lines in R^2, parametrized by
the angle ``theta`` in R/piZ of a unit direction vector; on the real line of
the upper half-plane this is the point ``x = cot(theta)``.  Intervals of the
boundary are counter-clockwise arcs of angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateFlag, InvalidInput, NumericallySingular, PingPongFailure
from .potential import Potential
from .shift_core import FirstK, ShiftSpec, TruncatedShift, build_truncation

PI = math.pi
ANGLE_TOL = 1e-12


# Cartan data


def _check_unimodular(A: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericallySingular("matrix has non-finite entries")
    det = np.linalg.det(A)
    scale = max(1.0, float(np.prod(np.linalg.norm(A, axis=0))))
    if abs(det - 1.0) > tol * scale:
        raise NumericallySingular(f"determinant {det:.6g} is not 1")
    return A


def projections(A) -> tuple[np.ndarray, np.ndarray]:
    """Jordan projection (log eigenvalue moduli) and Cartan projection (log singular values).

    Both are sorted decreasingly and sum to zero.
    """
    A = _check_unimodular(A)
    eig = np.sort(np.abs(np.linalg.eigvals(A)))[::-1]
    sv = np.linalg.svd(A, compute_uv=False)
    if eig[-1] <= 0 or sv[-1] <= 0:
        raise NumericallySingular("zero eigenvalue or singular value")
    jordan = np.log(eig)
    cartan = np.log(sv)
    return jordan - jordan.mean(), cartan - cartan.mean()


def jordan_projection(A) -> np.ndarray:
    return projections(A)[0]


def cartan_projection(A) -> np.ndarray:
    return projections(A)[1]


@dataclass(frozen=True)
class Functional:
    """Linear functional on the Cartan space, given by coefficients over simple roots or fundamental weights."""

    coeffs: tuple
    basis: str = "alpha"

    def __post_init__(self):
        if self.basis not in ("alpha", "omega"):
            raise InvalidInput(f"unknown basis {self.basis!r}")

    @property
    def dim(self) -> int:
        return len(self.coeffs) + 1

    def vector(self) -> np.ndarray:
        """Coefficient vector ``v`` with ``phi(a) = v . a``."""
        d = self.dim
        v = np.zeros(d)
        for k, c in enumerate(self.coeffs, start=1):
            if self.basis == "alpha":
                v[k - 1] += c
                v[k] -= c
            else:
                v[:k] += c
        return v

    def __call__(self, a) -> float:
        a = np.asarray(a, dtype=float)
        if a.shape != (self.dim,):
            raise InvalidInput(f"functional on dimension {self.dim} applied to a vector of shape {a.shape}")
        return float(self.vector() @ a)

    def alpha_sum(self) -> float:
        """Sum of the coefficients in the simple-root basis."""
        if self.basis == "alpha":
            return float(sum(self.coeffs))
        # omega_k = sum_j (A^{-1})_{kj} alpha_j; use the vector form instead
        v = self.vector()
        return float(sum(v[:k].sum() for k in range(1, self.dim)))


def simple_root(k: int, d: int) -> Functional:
    return Functional(tuple(1.0 if j == k else 0.0 for j in range(1, d)), "alpha")


def fundamental_weight(k: int, d: int) -> Functional:
    return Functional(tuple(1.0 if j == k else 0.0 for j in range(1, d)), "omega")


def hilbert_length(d: int) -> Functional:
    """``alpha_1 + ... + alpha_{d-1}``, i.e. ``a_1 - a_d``."""
    return Functional((1.0,) * (d - 1), "alpha")


# flags and the Iwasawa cocycle


def _orthonormal(K: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if np.max(np.abs(K.T @ K - np.eye(K.shape[0]))) > tol:
        raise InvalidInput("flag basis is not orthonormal")
    return K


def _qr_positive(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Q, R = np.linalg.qr(M)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs, R * signs[:, None]


def iwasawa_cocycle(A, K) -> np.ndarray:
    """``B(A, F)``: log of the diagonal of the triangular factor of ``A K``.

    ``K`` is an orthonormal basis adapted to the flag ``F`` (column i spans
    the i-th step modulo the previous ones).
    """
    A = np.asarray(A, dtype=float)
    K = _orthonormal(K)
    _, R = _qr_positive(A @ K)
    diag = np.diag(R)
    scale = float(np.linalg.norm(A, 2))
    if not np.all(np.isfinite(diag)) or np.any(diag <= 1e-300 * max(scale, 1.0)):
        raise DegenerateFlag("triangular factor is numerically singular")
    b = np.log(diag)
    return b - b.mean()


def flag_image(A, K) -> np.ndarray:
    """Orthonormal basis adapted to the flag ``A F``."""
    Q, _ = _qr_positive(np.asarray(A, dtype=float) @ _orthonormal(K))
    return Q


def attracting_flag(A) -> np.ndarray:
    """Orthonormal basis of the attracting flag (eigenvectors by decreasing modulus)."""
    A = np.asarray(A, dtype=float)
    w, V = np.linalg.eig(A)
    order = np.argsort(-np.abs(w))
    w, V = w[order], V[:, order]
    if np.any(np.abs(w.imag) > 1e-12 * np.abs(w).max()) or np.any(np.abs(np.diff(np.abs(w))) < 1e-12):
        raise DegenerateFlag("eigenvalues are not real with distinct moduli")
    Q, _ = _qr_positive(V.real)
    return Q


def standard_flag(d: int) -> np.ndarray:
    return np.eye(d)


def random_flag(rng: np.random.Generator, d: int) -> np.ndarray:
    Q, _ = _qr_positive(rng.standard_normal((d, d)))
    return Q


def random_sl(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    """Random determinant-one matrix ``exp(X)`` with X traceless Gaussian."""
    from scipy.linalg import expm

    X = rng.standard_normal((d, d)) * scale
    X -= np.eye(d) * np.trace(X) / d
    return expm(X)


# symmetric powers


@lru_cache(maxsize=None)
def _binom_scale(d: int) -> np.ndarray:
    m = d - 1
    return np.sqrt(np.array([math.comb(m, j) for j in range(d)], dtype=float))


def sym_power(A, d: int) -> np.ndarray:
    """Action of ``A`` on homogeneous polynomials of degree ``d-1``.

    Coordinates are taken in the basis ``sqrt(binom(d-1, j)) x^{d-1-j} y^j``,
    orthonormal for the rotation-invariant inner product, so rotations act
    orthogonally; the result is rescaled to determinant 1.
    """
    if d < 2:
        raise InvalidInput("symmetric power needs d >= 2")
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise InvalidInput("symmetric power takes a 2x2 matrix")
    (a, b), (c, e) = A
    m = d - 1
    M = np.empty((d, d))
    col1 = np.array([a, c])  # image of x, as coefficients of (1, y)
    col2 = np.array([b, e])  # image of y
    pow1 = [np.array([1.0])]
    pow2 = [np.array([1.0])]
    for _ in range(m):
        pow1.append(np.convolve(pow1[-1], col1))
        pow2.append(np.convolve(pow2[-1], col2))
    for k in range(d):
        M[:, k] = np.convolve(pow1[m - k], pow2[k])
    D = _binom_scale(d)
    S = M / D[:, None] * D[None, :]
    det = np.linalg.det(A)
    if det <= 0:
        raise NumericallySingular("symmetric power needs positive determinant")
    if abs(det - 1.0) > 1e-14:
        S = S / det ** (m / 2)
    return S


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def veronese_flag(theta: float, d: int) -> np.ndarray:
    """Orthonormal basis of the osculating flag of the Veronese curve at ``theta``."""
    return rotation(theta) if d == 2 else sym_power(rotation(theta), d)


# Möbius maps and boundary arcs


def angle_of(v) -> float:
    return math.atan2(v[1], v[0]) % PI


def angle_to_x(theta: float) -> float:
    """Boundary point on the real line (``inf`` for theta = 0)."""
    s = math.sin(theta)
    return math.inf if abs(s) < 1e-300 else math.cos(theta) / s


def x_to_angle(x: float) -> float:
    return math.atan2(1.0, x) % PI if math.isfinite(x) else 0.0


@dataclass(frozen=True)
class MobiusMap:
    entries: tuple  # ((a, b), (c, d))

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.shape != (2, 2):
            raise InvalidInput("Möbius map needs a 2x2 matrix")
        if abs(np.linalg.det(m) - 1.0) > 1e-12 * max(1.0, float(np.abs(m).max()) ** 2):
            raise InvalidInput(f"determinant {np.linalg.det(m):.6g} is not 1")
        object.__setattr__(self, "entries", tuple(map(tuple, m.tolist())))

    @classmethod
    def of(cls, m) -> "MobiusMap":
        return cls(tuple(map(tuple, np.asarray(m, dtype=float).tolist())))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.entries)

    @property
    def trace(self) -> float:
        return self.entries[0][0] + self.entries[1][1]

    @property
    def kind(self) -> str:
        t = abs(self.trace)
        m = self.matrix
        if np.allclose(m, np.eye(2), atol=1e-12) or np.allclose(m, -np.eye(2), atol=1e-12):
            return "identity"
        if abs(t - 2.0) <= 1e-12:
            return "parabolic"
        return "hyperbolic" if t > 2 else "elliptic"

    @property
    def translation_length(self) -> float:
        t = abs(self.trace)
        return 2.0 * math.acosh(t / 2.0) if t > 2 else 0.0

    def inverse(self) -> "MobiusMap":
        (a, b), (c, d) = self.entries
        return MobiusMap(((d, -b), (-c, a)))

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return MobiusMap.of(self.matrix @ other.matrix)

    def power(self, n: int) -> "MobiusMap":
        base = self if n >= 0 else self.inverse()
        return MobiusMap.of(np.linalg.matrix_power(base.matrix, abs(n)))

    def act(self, theta: float) -> float:
        return act_angle(self.matrix, theta)

    def act_z(self, z: complex) -> complex:
        (a, b), (c, d) = self.entries
        return (a * z + b) / (c * z + d)

    def attracting_angle(self) -> float:
        """Attracting fixed point on the boundary (the fixed point for parabolics)."""
        w, V = np.linalg.eig(self.matrix)
        if np.any(np.abs(w.imag) > 1e-12):
            raise InvalidInput("elliptic map has no boundary fixed point")
        i = int(np.argmax(np.abs(w.real)))
        return angle_of(V[:, i].real)


def act_angle(A: np.ndarray, theta: float) -> float:
    return angle_of(A @ np.array([math.cos(theta), math.sin(theta)]))


@dataclass(frozen=True)
class Arc:
    """Counter-clockwise arc ``[start, start + length]`` of angles mod pi."""

    start: float
    length: float

    def __post_init__(self):
        if not (0.0 <= self.length < PI):
            raise InvalidInput(f"arc length {self.length} outside [0, pi)")
        object.__setattr__(self, "start", self.start % PI)

    @classmethod
    def between(cls, start: float, end: float) -> "Arc":
        return cls(start % PI, (end - start) % PI)

    @classmethod
    def from_x(cls, lo: float, hi: float) -> "Arc":
        """Interval ``[lo, hi]`` of the extended real line, wrapping through infinity if ``lo > hi``."""
        # x increases as theta decreases
        return cls.between(x_to_angle(hi), x_to_angle(lo) if lo != -math.inf else PI)

    @property
    def end(self) -> float:
        return (self.start + self.length) % PI

    @property
    def center(self) -> float:
        return (self.start + self.length / 2) % PI

    def offset(self, theta: float) -> float:
        return (theta - self.start) % PI

    def contains(self, theta: float, tol: float = ANGLE_TOL) -> bool:
        off = self.offset(theta)
        return off <= self.length + tol or off >= PI - tol

    def contains_arc(self, other: "Arc", tol: float = ANGLE_TOL) -> bool:
        off = self.offset(other.start)
        if off >= PI - tol:
            off -= PI
        return off >= -tol and off + other.length <= self.length + tol

    def interiors_overlap(self, other: "Arc", tol: float = ANGLE_TOL) -> bool:
        a = self.offset(other.start)
        b = other.offset(self.start)
        return (a < self.length - tol and a > tol) or (b < other.length - tol and b > tol) or (
            abs(a) <= tol and min(self.length, other.length) > tol
        )

    def complement(self) -> "Arc":
        return Arc(self.end, PI - self.length)

    def image(self, A: np.ndarray) -> "Arc":
        a0 = act_angle(A, self.start)
        a1 = act_angle(A, self.start + self.length)
        length = (a1 - a0) % PI
        if length >= PI - 1e-9 and self.length < 1e-6:
            # endpoints crossed by rounding on a collapsed arc
            length = 0.0
        return Arc(a0, min(length, PI - 1e-15))

    def samples(self, k: int) -> np.ndarray:
        return (self.start + self.length * np.linspace(0.0, 1.0, k)) % PI

    def as_x(self) -> tuple[float, float]:
        return angle_to_x(self.end), angle_to_x(self.start)


def hull(arcs: Sequence[Arc], avoid: Sequence[Arc] = ()) -> Arc:
    """Smallest arc containing ``arcs`` whose complement holds the centers of ``avoid``.

    Without ``avoid`` the largest gap between the arcs is left out.
    """
    items = sorted(arcs, key=lambda a: a.start)
    if len(items) == 1:
        return items[0]
    centers = [a.center for a in avoid]
    best, best_after = None, 0
    for i, a in enumerate(items):
        nxt = items[(i + 1) % len(items)]
        gap = 0.0 if a.offset(nxt.start) <= a.length else (nxt.start - a.end) % PI
        hits = 0
        if gap > 0:
            g = Arc(a.end, gap)
            hits = sum(1 for c in centers if g.contains(c, tol=0.0))
        key = (hits, gap)
        if best is None or key > best:
            best, best_after = key, i
    start = items[(best_after + 1) % len(items)].start
    end = items[best_after].end
    return Arc.between(start, end)


# presentations and the coding


Gen = tuple  # (generator name, +1 or -1)


@dataclass
class GroupPresentation:
    """Free generators with ping-pong intervals.

    ``intervals[(name, s)]`` is the arc the generator ``name**s`` maps the
    complement of ``intervals[(name, -s)]`` into.
    """

    hyperbolic: dict
    parabolic: dict
    intervals: dict
    basepoint: complex = 1j  # the origin of the disk model
    name: str = ""

    @property
    def generators(self) -> dict:
        return {**self.hyperbolic, **self.parabolic}

    def element(self, gen: Gen) -> MobiusMap:
        g = self.generators[gen[0]]
        return g if gen[1] > 0 else g.inverse()

    def check(self) -> list[str]:
        """Return the list of violated ping-pong conditions (empty when valid)."""
        problems = []
        if not self.parabolic:
            problems.append("no parabolic generator: the group is convex cocompact; use a finite coding")
        for name, g in self.hyperbolic.items():
            if g.kind != "hyperbolic":
                problems.append(f"{name} is {g.kind}, expected hyperbolic")
        for name, g in self.parabolic.items():
            if g.kind != "parabolic":
                problems.append(f"{name} is {g.kind}, expected parabolic")
        keys = [(n, s) for n in self.generators for s in (1, -1)]
        missing = [k for k in keys if k not in self.intervals]
        if missing:
            problems.append(f"missing intervals for {missing}")
            return problems
        for i, k1 in enumerate(keys):
            for k2 in keys[i + 1:]:
                if self.intervals[k1].interiors_overlap(self.intervals[k2]):
                    problems.append(f"intervals of {k1} and {k2} overlap")
        total = sum(self.intervals[k].length for k in keys)
        if total >= PI - 1e-9:
            problems.append("intervals cover the boundary; the quotient would have finite area")
        for name, s in keys:
            g = self.element((name, s)).matrix
            dom = self.intervals[(name, -s)].complement()
            img = dom.image(g)
            if not self.intervals[(name, s)].contains_arc(img, tol=1e-9):
                problems.append(f"{name}^{s} does not map the complement of its inverse's interval into its own")
        return problems


def _presentation(hmat, pmat, h_iv, p_iv, name) -> GroupPresentation:
    h, p = MobiusMap.of(hmat), MobiusMap.of(pmat)
    iv = {
        ("h", 1): Arc.from_x(*h_iv[0]), ("h", -1): Arc.from_x(*h_iv[1]),
        ("p", 1): Arc.from_x(*p_iv[0]), ("p", -1): Arc.from_x(*p_iv[1]),
    }
    return GroupPresentation({"h": h}, {"p": p}, iv, name=name)


def default_presentation() -> GroupPresentation:
    """``<h, p>`` with h = [[2,1],[1,1]] and the parabolic p = [[1,6],[0,1]]."""
    return _presentation(
        [[2, 1], [1, 1]], [[1, 6], [0, 1]],
        [(1.0, 3.0), (-2.0, 0.0)], [(3.5, math.inf), (-math.inf, -2.5)], "default",
    )


def second_presentation() -> GroupPresentation:
    """Same parabolic generator, different hyperbolic one: h = [[3,1],[2,1]]."""
    return _presentation(
        [[3, 1], [2, 1]], [[1, 6], [0, 1]],
        [(1.0, 2.0), (-1.0, 0.0)], [(3.5, math.inf), (-math.inf, -2.5)], "second",
    )


def presentation_from_config(cfg: Mapping) -> GroupPresentation:
    """Build from ``{"hyperbolic": {name: [[..],[..]]}, "parabolic": {...}, "intervals": {...}}``.

    Intervals are keyed ``name`` / ``name^-1`` and given either as
    ``{"angles": [start, end]}`` or ``{"x": [lo, hi]}``.
    """
    def maps(section):
        return {str(k): MobiusMap.of(v) for k, v in (cfg.get(section) or {}).items()}

    hyp, par = maps("hyperbolic"), maps("parabolic")
    iv = {}
    for key, spec in (cfg.get("intervals") or {}).items():
        key = str(key)
        name, sign = (key[:-3], -1) if key.endswith("^-1") else (key, 1)
        if "angles" in spec:
            iv[(name, sign)] = Arc.between(*map(float, spec["angles"]))
        elif "x" in spec:
            iv[(name, sign)] = Arc.from_x(*map(float, spec["x"]))
        else:
            raise InvalidInput(f"interval {key!r} needs 'angles' or 'x'")
    bp = cfg.get("basepoint")
    return GroupPresentation(hyp, par, iv, complex(bp) if bp is not None else 1j, str(cfg.get("name", "")))


@dataclass(frozen=True)
class CodingLetter:
    id: int
    generator: str
    power: int  # signed exponent; +-1 for hyperbolic letters
    parabolic: bool

    @property
    def r(self) -> int:
        return abs(self.power) + 1 if self.parabolic else 1

    @property
    def s(self) -> Gen | None:
        return (self.generator, 1 if self.power > 0 else -1) if self.parabolic else None

    @property
    def g_a(self) -> Gen:
        return (self.generator, 1 if self.power > 0 else -1)

    @property
    def word(self) -> tuple:
        return ((self.generator, self.power),)

    def decomposition(self) -> tuple:
        """``G(a) = s^{r-2} g_a`` as a word: ``((gen, exponent of s), g_a)``."""
        if self.s is None:
            return (self.g_a,)
        return ((self.s[0], self.s[1] * (self.r - 2)), self.g_a)

    def __str__(self) -> str:
        return f"{self.generator}^{self.power}"


class CodingTable:
    """Countable coding coalescing the powers of each parabolic generator.

    Letter ids are 1, 2, ...: first ``h^1, h^-1`` for every hyperbolic
    generator, then ``p^n, p^-n`` for n = 1, 2, ... and every parabolic one.
    """

    def __init__(self, pres: GroupPresentation):
        self.presentation = pres
        self.hyp_names = list(pres.hyperbolic)
        self.par_names = list(pres.parabolic)
        self.parabolic_set = [(n, s) for n in self.par_names for s in (1, -1)]
        self.relation_set = [(n, s) for n in self.hyp_names + self.par_names for s in (1, -1)]
        self._targets = {k: pres.intervals[k] for k in self.relation_set}
        self._succ_cache: dict = {}
        self._mat_cache: dict = {}

    # letters
    @property
    def n_hyp(self) -> int:
        return 2 * len(self.hyp_names)

    def letter(self, i: int) -> CodingLetter:
        i = int(i)
        if i < 1:
            raise InvalidInput(f"letter ids start at 1, got {i}")
        if i <= self.n_hyp:
            name = self.hyp_names[(i - 1) // 2]
            return CodingLetter(i, name, 1 if i % 2 == 1 else -1, False)
        k = i - self.n_hyp - 1
        per = 2 * len(self.par_names)
        n, rem = divmod(k, per)
        name = self.par_names[rem // 2]
        return CodingLetter(i, name, (n + 1) * (1 if rem % 2 == 0 else -1), True)

    def id_of(self, generator: str, power: int) -> int:
        if generator in self.hyp_names:
            if abs(power) != 1:
                raise InvalidInput("hyperbolic letters are single generators")
            return 2 * self.hyp_names.index(generator) + (1 if power > 0 else 2)
        j = self.par_names.index(generator)
        n = abs(power)
        if n < 1:
            raise InvalidInput("parabolic letters need a nonzero power")
        return self.n_hyp + (n - 1) * 2 * len(self.par_names) + 2 * j + (1 if power > 0 else 2)

    def letters_up_to(self, max_power: int) -> list[int]:
        return list(range(1, self.n_hyp + 2 * len(self.par_names) * max_power + 1))

    def parse(self, text: str) -> int:
        """``"h"``, ``"h^-1"``, ``"p^3"`` to a letter id."""
        name, _, exp = text.partition("^")
        return self.id_of(name, int(exp) if exp else 1)

    def G(self, i: int) -> np.ndarray:
        hit = self._mat_cache.get(i)
        if hit is None:
            a = self.letter(i)
            hit = self.presentation.generators[a.generator].power(a.power).matrix
            self._mat_cache[i] = hit
        return hit

    # transitions
    def allowed(self, i: int, j: int) -> bool:
        a, b = self.letter(i), self.letter(j)
        if a.generator == b.generator and a.power == -b.power:
            return False
        if a.parabolic and b.generator == a.generator:
            return False
        return True

    def block_matrix(self, letters: Sequence[int]) -> np.ndarray:
        ls = [self.letter(i) for i in letters]
        names = {n: k for k, n in enumerate(self.hyp_names + self.par_names)}
        gen = np.array([names[a.generator] for a in ls])
        pw = np.array([a.power for a in ls])
        par = np.array([a.parabolic for a in ls])
        same = gen[:, None] == gen[None, :]
        inverse = same & (pw[:, None] == -pw[None, :])
        blocked = inverse | (same & par[:, None])
        return (~blocked).astype(np.uint8)

    def shift_spec(self) -> ShiftSpec:
        return ShiftSpec(self.allowed, None, full=False, block_matrix=self.block_matrix,
                         name=f"parabolic coding of {self.presentation.name or 'group'}")

    def truncation(self, max_power: int) -> TruncatedShift:
        """Letters with parabolic powers up to ``max_power``."""
        return build_truncation(self.shift_spec(), FirstK(len(self.letters_up_to(max_power))))

    # boundary geometry
    def target(self, i: int) -> Arc:
        return self._targets[self.letter(i).g_a]

    def successor_region(self, i: int) -> Arc:
        """Arc containing ``omega(y)`` for every admissible ``y`` following the letter ``i``."""
        a = self.letter(i)
        key = (a.generator, a.power if not a.parabolic else (1 if a.power > 0 else -1), a.parabolic)
        hit = self._succ_cache.get(key)
        if hit is None:
            arcs, avoid = [], []
            for name, sg in self.relation_set:
                if self.allowed(i, self.id_of(name, sg)):
                    arcs.append(self._targets[(name, sg)])
                else:
                    avoid.append(self._targets[(name, sg)])
            hit = hull(arcs, avoid)
            self._succ_cache[key] = hit
        return hit

    def check(self) -> None:
        problems = self.presentation.check()
        for i in range(1, self.n_hyp + 2 * len(self.par_names) + 1):
            a = self.letter(i)
            region = self.successor_region(i)
            forbidden = self._targets[(a.generator, -a.g_a[1])]
            if region.interiors_overlap(forbidden) and not a.parabolic:
                problems.append(f"successor region of {a} meets the interval of its inverse")
            if not self.target(i).contains_arc(region.image(self.G(i)), tol=1e-9):
                problems.append(f"{a} does not map its successor region into its interval")
        if problems:
            raise PingPongFailure("; ".join(problems))

    def omega_arc(self, prefix: Sequence[int]) -> Arc:
        """Arc ``G(x_1)...G(x_m)`` applied to the successor region of ``x_m``."""
        if not prefix:
            raise InvalidInput("empty prefix")
        arc = self.successor_region(prefix[-1])
        for i in reversed(prefix):
            arc = arc.image(self.G(i))
        return arc

    def is_admissible(self, word: Sequence[int], cyclic: bool = False) -> bool:
        pairs = list(zip(word, word[1:]))
        if cyclic:
            pairs.append((word[-1], word[0]))
        return all(self.allowed(a, b) for a, b in pairs)

    def product(self, word: Sequence[int]) -> np.ndarray:
        M = np.eye(2)
        for i in word:
            M = M @ self.G(i)
        return M

    def multiplicity_bound(self, max_r: int) -> int:
        """Measured ``Q = max_n #r^{-1}(n)`` over ``n <= max_r``."""
        counts: dict = {}
        for i in self.letters_up_to(max_r):
            r = self.letter(i).r
            counts[r] = counts.get(r, 0) + 1
        return max(counts[n] for n in counts if n <= max_r)

    def shadow_constant(self, words: Sequence[Sequence[int]]) -> float:
        """Measured ``L``: largest distance from ``G(x_1..x_n) i`` to the ray from ``i`` to ``omega(x)``."""
        if self.presentation.basepoint != 1j:
            raise InvalidInput("shadow constants are measured from the base point i")
        worst = 0.0
        for w in words:
            theta = self.omega_arc(w).center
            c, s = math.cos(theta), math.sin(theta)
            # rotation about i sending omega(x) to infinity
            M = np.array([[c, s], [-s, c]])
            for i in w:
                M = M @ self.G(i)
                worst = max(worst, _distance_to_vertical_ray(M))
        return worst


def _distance_to_vertical_ray(M: np.ndarray) -> float:
    """Distance from ``M(i)`` to the ray from i up to infinity, for ``M`` in SL(2, R)."""
    (a, b), (c, d) = M
    den = c * c + d * d
    u, v = (a * c + b * d) / den, 1.0 / den
    if u * u + v * v >= 1.0:
        return math.asinh(abs(u) / v)
    return math.acosh(1.0 + (u * u + (v - 1.0) ** 2) / (2.0 * v))


def build_coding(pres: GroupPresentation) -> CodingTable:
    """Coding table for a verified ping-pong presentation (raises PingPongFailure otherwise)."""
    problems = pres.check()
    if problems:
        raise PingPongFailure("; ".join(problems))
    table = CodingTable(pres)
    table.check()
    return table


def omega_endpoint(coding: CodingTable, prefix: Sequence[int], depth: int | None = None) -> tuple[float, float]:
    """Center angle and half-width of the arc certified to contain ``omega(x)``."""
    word = tuple(prefix)[:depth] if depth else tuple(prefix)
    if not coding.is_admissible(word):
        raise InvalidInput(f"{word!r} is not admissible")
    arc = coding.omega_arc(word)
    return arc.center, arc.length / 2


# representations and roofs


@dataclass
class Representation:
    dim: int
    images: dict  # generator name -> matrix
    kind: str  # "sl2" or "sym_power"
    presentation: GroupPresentation
    _cache: dict = field(default_factory=dict, repr=False)

    def of_matrix(self, M2: np.ndarray) -> np.ndarray:
        return np.asarray(M2, dtype=float) if self.dim == 2 else sym_power(M2, self.dim)

    def letter_image(self, coding: CodingTable, i: int) -> np.ndarray:
        hit = self._cache.get(i)
        if hit is None:
            hit = self.of_matrix(coding.G(i))
            self._cache[i] = hit
        return hit

    def flag(self, theta: float) -> np.ndarray:
        return veronese_flag(theta, self.dim)

    def jordan(self, M2: np.ndarray) -> np.ndarray:
        """Jordan projection of the image of a 2x2 matrix.

        The image of ``M2`` has eigenvalue moduli ``mu^(d-1-2j)``, with ``mu``
        taken from the trace of ``M2``.  This avoids the loss of relative
        accuracy of a general eigensolver on the small eigenvalues of a
        non-normal image.
        """
        t = abs(float(np.trace(M2)))
        log_mu = math.acosh(t / 2.0) if t > 2 else 0.0
        return np.array([(self.dim - 1 - 2 * j) * log_mu for j in range(self.dim)])

    def check_parabolics(self) -> None:
        eye = np.eye(self.dim)
        for name in self.presentation.parabolic:
            N = self.images[name] - eye
            top = np.linalg.matrix_power(N, self.dim - 1)
            if np.max(np.abs(top)) < 1e-9 or np.max(np.abs(top @ N)) > 1e-9 * max(1.0, np.abs(N).max()) ** self.dim:
                raise InvalidInput(f"image of {name} is not unipotent with a single Jordan block")


def fuchsian_representation(pres: GroupPresentation, d: int = 2) -> Representation:
    """Inclusion (d = 2) or its ``(d-1)``-th symmetric power."""
    images = {n: (g.matrix if d == 2 else sym_power(g.matrix, d)) for n, g in pres.generators.items()}
    rep = Representation(d, images, "sl2" if d == 2 else "sym_power", pres)
    rep.check_parabolics()
    return rep


def roof(
    rho: Representation,
    coding: CodingTable,
    phi: Functional,
    x_prefix: Sequence[int],
    depth: int | None = None,
    samples: int | None = None,
) -> tuple[float, float]:
    """``phi`` of ``B(rho(G(x_1)), xi(omega(sigma x)))`` on the cylinder of ``x_prefix``.

    ``omega(sigma x)`` is only known to lie on an arc; the value is taken at
    its center and the error is the spread over sample points of the arc,
    inflated by 25%.
    """
    word = tuple(x_prefix)[:depth] if depth else tuple(x_prefix)
    if not word:
        raise InvalidInput("empty prefix")
    if phi.dim != rho.dim:
        raise InvalidInput(f"functional of dimension {phi.dim} for a representation of dimension {rho.dim}")
    A = rho.letter_image(coding, word[0])
    arc = coding.omega_arc(word[1:]) if len(word) > 1 else coding.successor_region(word[0])
    vec = phi.vector()
    if samples is None:
        samples = 17 if arc.length > 1e-3 else 3
    thetas = arc.samples(samples)
    vals = np.array([vec @ iwasawa_cocycle(A, rho.flag(float(t))) for t in thetas])
    center = float(vec @ iwasawa_cocycle(A, rho.flag(arc.center)))
    err = 1.25 * float(np.max(np.abs(vals - center))) + 1e-12 * (1.0 + abs(center))
    return center, err


def roof_potential(
    rho: Representation,
    coding: CodingTable,
    phi: Functional,
    holder: tuple[float, float] | None = None,
    name: str = "",
) -> Potential:
    """Roof function as a :class:`Potential` on the coding's letter ids.

    ``holder = (A, alpha)``; when omitted it is fitted from the radii of
    sampled cylinders (the constants are not known in closed form).
    """
    def fn(prefix):
        return roof(rho, coding, phi, prefix)

    A, alpha = holder if holder is not None else fit_holder(fn, coding)
    return Potential(fn, A, alpha, None, name or f"roof(d={rho.dim})")


def sample_words(coding: CodingTable, rng: np.random.Generator, length: int, max_power: int,
                 count: int) -> list[tuple[int, ...]]:
    """Random admissible words; parabolic powers are log-uniform up to ``max_power``."""
    out = []
    names = coding.relation_set
    while len(out) < count:
        w: list[int] = []
        while len(w) < length:
            name, s = names[rng.integers(len(names))]
            if name in coding.par_names:
                n = int(round(math.exp(rng.uniform(0.0, math.log(max_power)))))
                cand = coding.id_of(name, s * max(1, min(n, max_power)))
            else:
                cand = coding.id_of(name, s)
            if not w or coding.allowed(w[-1], cand):
                w.append(cand)
        out.append(tuple(w))
    return out


def fit_holder(fn, coding: CodingTable, depths: Sequence[int] = (2, 3, 4, 5, 6, 7, 8)) -> tuple[float, float]:
    """Fit ``radius(m) <= A e^{-alpha m}`` on sampled cylinders of depth m."""
    rng = np.random.default_rng(0)
    words = sample_words(coding, rng, max(depths), 8, 12)
    worst = []
    for m in depths:
        worst.append(max(fn(w[:m])[1] for w in words))
    ms = np.array(depths, dtype=float)
    logs = np.log(np.maximum(worst, 1e-300))
    slope = float(np.polyfit(ms, logs, 1)[0])
    alpha = max(-slope, 1e-3)
    A = float(np.max(np.array(worst) * np.exp(alpha * ms)))
    return A, alpha


def periodic_roof_check(
    rho: Representation, coding: CodingTable, phi: Functional, word: Sequence[int], depth: int = 40,
) -> tuple[float, float, float]:
    """``(S_n tau(x), phi(l(rho(G(x_1)...G(x_n)))), error)`` for the periodic point of ``word``."""
    word = tuple(word)
    n = len(word)
    reps = -(-(depth + n) // n) + 1
    point = word * reps
    total, err = 0.0, 0.0
    for j in range(n):
        v, r = roof(rho, coding, phi, point[j:j + depth])
        total += v
        err += r
    target = phi(rho.jordan(coding.product(word)))
    return total, target, err + 1e-10 * (1.0 + abs(target))
