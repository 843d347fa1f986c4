"""Pressure, transfer operators, equilibrium data, critical exponents and the Bowen root.

All weights are stored as logarithms.  Reductions run in a fixed order, so
results do not depend on the environment.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate
from scipy.sparse import csr_matrix
from scipy.special import logsumexp

from .errors import (
    InvalidInput,
    LetterAbsent,
    NoConvergence,
    NoSignChange,
    TailModelUnavailable,
    TooManyCylinders,
)
from .potential import Potential, all_letter_bounds, periodic_sum
from .shift_core import TruncatedShift, fix_array

SCALAR_TOL = 1e-10
SPECTRAL_TOL = 1e-8
MAX_EDGES = 2_000_000


# periodic pressure


class PeriodicPressure(NamedTuple):
    estimates: list[float]  # p_n = (1/n) log Z_n, n = 1..n_max
    ratio_estimate: float  # log(Z_n / Z_{n-1}) at the last n where both are positive
    cesaro: float

    @property
    def summary(self) -> float:
        return self.ratio_estimate


def _log_partition_matrix(shift: TruncatedShift, g: Potential, a_idx: int, n_max: int) -> list[float]:
    k = shift.size
    lcd = g.locally_constant_depth
    logm = np.full((k, k), -np.inf)
    for i in range(k):
        for j in shift.successors_idx(i).tolist():
            word = (shift.letters[i], shift.letters[j])
            logm[i, j] = g.value(word[:lcd])
    # row vector iteration v <- v M started at e_a; Z_n = (M^n)_{aa}
    scale = np.max(logm[np.isfinite(logm)])
    mat = np.exp(logm - scale)
    v = np.zeros(k)
    v[a_idx] = 1.0
    log_norm = 0.0
    out = []
    for n in range(1, n_max + 1):
        v = v @ mat
        s = v.sum()
        log_norm += math.log(s) + scale
        v /= s
        out.append(log_norm + math.log(v[a_idx]) if v[a_idx] > 0 else -math.inf)
    return out


def pressure_periodic(shift: TruncatedShift, g: Potential, a, n_max: int = 20) -> PeriodicPressure:
    """Periodic-orbit pressure estimates ``(1/n) log sum_{Fix^n, x_1=a} e^{S_n g}``."""
    if a not in shift.index:
        raise LetterAbsent(f"letter {a!r} not in truncation")
    ai = shift.index[a]
    lcd = g.locally_constant_depth
    if lcd is not None and lcd <= 2 and shift.size <= 2000:
        logz = _log_partition_matrix(shift, g, ai, n_max)
    else:
        logz = []
        for n in range(1, n_max + 1):
            pd = g.point_depth(n + 1)
            sums = [periodic_sum(g, row, shift, depth=pd)[0] for row in fix_array(shift, n, a).tolist()]
            logz.append(float(logsumexp(sums)) if sums else -math.inf)
    est = [lz / n for n, lz in enumerate(logz, start=1)]
    ratio = math.nan
    for n in range(len(logz) - 1, 0, -1):
        if math.isfinite(logz[n]) and math.isfinite(logz[n - 1]):
            ratio = logz[n] - logz[n - 1]
            break
    finite = [e for e in est if math.isfinite(e)]
    cesaro = float(np.mean(finite)) if finite else -math.inf
    return PeriodicPressure(est, ratio, cesaro)


# transfer operator


@dataclass(eq=False)
class TransferDiscretization:
    """Transfer operator on depth-k cylinders.

    Entry ``(q, p)`` carries the log-weight ``g(y)`` of the branch sending the
    cylinder ``p`` of a preimage ``y`` onto the cylinder ``q`` of ``x = sigma y``.
    ``g`` is evaluated at ``a x`` with ``x`` the lexicographically least
    admissible extension of ``q``.  In rank-one mode (full shift, first-letter
    potential) the weights depend on the preimage letter only and are stored
    per letter.
    """

    shift: TruncatedShift
    depth: int
    cylinders: np.ndarray  # (m, depth) letter indices, lexicographic
    rows: np.ndarray
    cols: np.ndarray
    edge_words: np.ndarray  # (E, depth+1) letter indices; (m, 1) in rank-one mode
    terms: list  # [(coef, Potential)]
    rank_one: bool
    _cache: dict = field(default_factory=dict, repr=False)
    tail: "TailModel | None" = None

    @property
    def potential(self) -> Potential:
        from .potential import linear_combination

        return linear_combination(self.terms)

    @property
    def size(self) -> int:
        return len(self.cylinders)

    def values_of(self, pot: Potential) -> tuple[np.ndarray, np.ndarray]:
        """Values and radii of ``pot`` at the edge representatives."""
        key = id(pot)
        hit = self._cache.get(key)
        if hit is not None:
            return hit[1], hit[2]
        letters = self.shift.letters
        lcd = pot.locally_constant_depth
        if self.rank_one and lcd != 1:
            raise InvalidInput("rank-one discretization needs first-letter potentials")
        if lcd is not None and lcd <= self.edge_words.shape[1]:
            plen = lcd
            words = [tuple(letters[i] for i in w[:plen]) for w in self.edge_words.tolist()]
        else:
            plen = pot.point_depth(self.depth + 1)
            words = []
            for w in self.edge_words.tolist():
                ext = self.shift.least_extension_idx(w, plen)
                words.append(tuple(letters[i] for i in ext))
        vals = np.empty(len(words))
        rads = np.empty(len(words))
        for n, w in enumerate(words):
            vals[n], rads[n] = pot.eval(w)
        self._cache[key] = (pot, vals, rads)
        return vals, rads

    def log_weights(self) -> np.ndarray:
        out = np.zeros(len(self.edge_words))
        for c, p in self.terms:
            out += c * self.values_of(p)[0]
        return out

    def entry_errors(self) -> np.ndarray:
        """Per-entry discretization error: oscillation of the potential on the (k+1)-cylinder."""
        err = np.zeros(len(self.edge_words))
        for c, p in self.terms:
            err += abs(c) * p.holder_radius(self.depth + 1)
        return err

    def with_terms(self, terms) -> "TransferDiscretization":
        """Same cylinders and cache, different linear combination of potentials."""
        flat = []
        for c, p in terms:
            flat.extend((c * c2, q) for c2, q in p.terms)
        return TransferDiscretization(
            self.shift, self.depth, self.cylinders, self.rows, self.cols, self.edge_words,
            flat, self.rank_one, self._cache, self.tail,
        )

    def scaled(self, c: float) -> "TransferDiscretization":
        return self.with_terms([(c * c0, p) for c0, p in self.terms])

    def with_tail(self, tail: "TailModel | None") -> "TransferDiscretization":
        op = self.with_terms(self.terms)
        op.tail = tail
        return op

    def provenance(self) -> dict:
        return {
            "depth": self.depth,
            "cylinders": int(self.size),
            "transitions": int(len(self.rows)) if not self.rank_one else int(self.size) ** 2,
            "rank_one": self.rank_one,
            "truncation": _note(self.shift),
            "max_entry_error": float(self.entry_errors().max(initial=0.0)),
        }


def _note(shift: TruncatedShift) -> dict:
    note = dict(shift.cutoff_note)
    dropped = note.get("dropped", [])
    note["dropped"] = [str(a) for a in dropped[:20]] + (["..."] if len(dropped) > 20 else [])
    return note


def _words(shift: TruncatedShift, length: int) -> np.ndarray:
    k = shift.size
    rows = np.arange(k, dtype=np.int64)[:, None]
    for _ in range(length - 1):
        if shift.full:
            new = np.repeat(rows, k, axis=0)
            col = np.tile(np.arange(k, dtype=np.int64), len(rows))
        else:
            ri, bi = np.nonzero(shift.matrix[rows[:, -1]])
            new, col = rows[ri], bi.astype(np.int64)
        rows = np.concatenate([new, col[:, None]], axis=1)
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def _count_words(shift: TruncatedShift, length: int) -> int:
    if shift.full:
        return shift.size ** length
    v = np.ones(shift.size, dtype=object)
    mat = np.array(shift.matrix, dtype=object)
    for _ in range(length - 1):
        v = mat.dot(v)
    return int(sum(v))


def build_transfer(
    shift: TruncatedShift, g: Potential, depth: int = 1, max_edges: int = MAX_EDGES
) -> TransferDiscretization:
    """Discretize the transfer operator of ``g`` on admissible ``depth``-cylinders."""
    if depth < 1:
        raise InvalidInput("depth must be >= 1")
    terms = list(g.terms)
    if shift.full and depth == 1 and all(p.locally_constant_depth == 1 for _, p in terms):
        k = shift.size
        idx = np.arange(k, dtype=np.int64)[:, None]
        empty = np.zeros(0, dtype=np.int64)
        return TransferDiscretization(shift, 1, idx, empty, empty, idx, terms, True)
    needed = _count_words(shift, depth + 1)
    if needed > max_edges:
        raise TooManyCylinders(max_edges, needed)
    k = shift.size
    cyl = _words(shift, depth)
    edges = _words(shift, depth + 1)
    if float(k) ** depth > 2 ** 62:
        raise TooManyCylinders(max_edges, needed)
    weights = k ** np.arange(depth - 1, -1, -1, dtype=np.int64)
    code = cyl @ weights
    rows = np.searchsorted(code, edges[:, 1:] @ weights)
    cols = np.searchsorted(code, edges[:, :-1] @ weights)
    return TransferDiscretization(shift, depth, cyl, rows, cols, edges, terms, False)


# equilibrium data


@dataclass(eq=False)
class EquilibriumData:
    pressure: float
    h: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    mean_f: float
    gibbs_constant: float
    residual_h: float
    residual_nu: float
    iterations: int
    op: TransferDiscretization = field(repr=False)
    edge_mu: np.ndarray | None = field(default=None, repr=False)

    def integrate(self, pot: Potential) -> float:
        """Integral of ``pot`` against the equilibrium measure."""
        vals, _ = self.op.values_of(pot)
        if self.op.rank_one:
            return float(np.dot(self.mu, vals))
        return float(np.dot(self.edge_mu, vals))

    def to_dict(self) -> dict:
        return {
            "pressure": self.pressure,
            "mean_f": self.mean_f,
            "gibbs_constant": self.gibbs_constant,
            "residual_h": self.residual_h,
            "residual_nu": self.residual_nu,
            "iterations": self.iterations,
            "h": self.h.tolist() if self.h.size <= 64 else None,
            "nu": self.nu.tolist() if self.nu.size <= 64 else None,
            "mu": self.mu.tolist() if self.mu.size <= 64 else None,
            "discretization": self.op.provenance(),
        }


def _tail_log(op: TransferDiscretization) -> float | None:
    """log of the tail remainder when ``op`` is ``-s f`` for the tail's base potential."""
    tail = op.tail
    if tail is None or not op.rank_one or len(op.terms) != 1:
        return None
    c, p = op.terms[0]
    if p is not tail.base or c >= 0:
        return None
    rem = tail.remainder(-c)
    return math.log(rem) if rem > 0 else None


def spectral_pressure(
    op: TransferDiscretization,
    tol: float = SPECTRAL_TOL,
    max_iter: int = 200_000,
    observable: Potential | None = None,
    gibbs_samples: int = 32,
) -> EquilibriumData:
    """Leading eigen-data of the discretized transfer operator by power iteration.

    Residuals are relative: ``||L h - e^P h||_inf / e^P`` with ``max h = 1`` and
    ``||nu L - e^P nu||_1 / e^P`` with ``sum nu = 1``.  ``mean_f`` integrates
    ``observable`` (default: the operator's own potential).
    """
    logw = op.log_weights()
    if op.rank_one:
        tail = _tail_log(op)
        total = logsumexp(logw) if tail is None else logsumexp(np.append(logw, tail))
        nu = np.exp(logw - total)
        mu = nu / nu.sum()
        eq = EquilibriumData(
            float(total), np.ones_like(nu), nu, mu, 0.0, 1.0, 0.0, 0.0, 0, op, None
        )
        eq.mean_f = eq.integrate(observable) if observable is not None else float(np.dot(mu, logw))
        return eq

    m = op.size
    wmax = float(logw.max())
    mat = csr_matrix((np.exp(logw - wmax), (op.rows, op.cols)), shape=(m, m))
    mat_t = mat.T.tocsr()
    h = np.ones(m)
    nu = np.ones(m) / m
    lam = 1.0
    res_h = res_nu = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        lh = mat @ h
        nl = mat_t @ nu
        lam = float(nu @ lh) / float(nu @ h)
        res_h = float(np.max(np.abs(lh - lam * h))) / (lam * float(h.max()))
        res_nu = float(np.sum(np.abs(nl - lam * nu))) / (lam * float(nu.sum()))
        h = lh / lh.max()
        nu = nl / nl.sum()
        if res_h <= tol * 1e-2 and res_nu <= tol * 1e-2:
            break
    else:
        if res_h > tol or res_nu > tol:
            raise NoConvergence(max_iter, max(res_h, res_nu))
    lh = mat @ h
    lam = float(nu @ lh) / float(nu @ h)
    res_h = float(np.max(np.abs(lh - lam * h))) / (lam * float(h.max()))
    res_nu = float(np.sum(np.abs(mat_t @ nu - lam * nu))) / lam
    if np.any(h <= 0):
        raise NoConvergence(it, math.inf)
    pressure = wmax + math.log(lam)
    hn = h / float(nu @ h)
    mu = hn * nu
    # edge measure: mu(p then q) = h_p nu_q L[q, p] / lambda
    edge_mu = hn[op.cols] * nu[op.rows] * np.exp(logw - wmax) / lam
    edge_mu /= edge_mu.sum()
    eq = EquilibriumData(pressure, h, nu, mu, 0.0, 1.0, res_h, res_nu, it, op, edge_mu)
    eq.mean_f = eq.integrate(observable) if observable is not None else float(np.dot(edge_mu, logw))
    eq.gibbs_constant = _gibbs_constant(eq, hn, logw, gibbs_samples)
    return eq


def _gibbs_constant(eq: EquilibriumData, hn: np.ndarray, logw: np.ndarray, samples: int) -> float:
    """Largest observed two-sided ratio between cylinder measures and e^{S_n g - nP}.

    Cylinder measures come from the eigen-data:
    ``mu[w] = e^{-nP} h(w) sum_q nu_q e^{S_n g(w x_q)}`` over the cylinders q
    that may follow w.
    """
    op = eq.op
    if samples <= 0 or op.size > 512:
        return math.nan
    shift, k = op.shift, op.depth
    g = op.potential
    P = eq.pressure
    cyl_index = {tuple(c): i for i, c in enumerate(op.cylinders.tolist())}
    worst = 1.0
    words = _words(shift, k + 1)[:samples].tolist()
    letters = shift.letters
    for w in words:
        n = len(w)
        hw = hn[cyl_index[tuple(w[:k])]]
        terms = []
        for qi, q in enumerate(op.cylinders.tolist()):
            if not shift.allowed_idx(w[-1], q[0]):
                continue
            pd = g.point_depth(n + k + 1)
            pt = shift.least_extension_idx(tuple(w) + tuple(q), n + pd)
            s = sum(g.value(tuple(letters[i] for i in pt[j:j + pd])) for j in range(n))
            terms.append(math.log(eq.nu[qi]) + s)
        log_mu = -n * P + math.log(hw) + float(logsumexp(terms))
        pd = g.point_depth(n + 1)
        pt = shift.least_extension_idx(tuple(w), n + pd)
        s = sum(g.value(tuple(letters[i] for i in pt[j:j + pd])) for j in range(n))
        ratio = math.exp(log_mu - (s - n * P))
        worst = max(worst, ratio, 1 / ratio)
    return worst


# critical exponent and tail models


@dataclass(eq=False)
class TailModel:
    """Asymptotic model ``S(f, a_j) ~ c log j + e log log j + b`` for the j-th smallest letter sup.

    ``kind`` is ``zeta`` (e = 0), ``zeta_loglog`` or ``linear``
    (``S ~ c j + b``); ``user`` models supply their own remainder.
    ``K`` letters are summed exactly; ``remainder(s)`` bounds the rest.
    """

    kind: str
    c: float
    b: float
    K: int
    e: float = 0.0
    base: Potential | None = None
    user_remainder: Callable[[float], float] | None = None
    user_exponent: float | None = None
    user_diverges: bool | None = None
    fit_rms: float = 0.0

    @property
    def critical_exponent(self) -> float:
        if self.kind == "user":
            return float(self.user_exponent)
        if self.kind == "linear":
            return 0.0
        return 1.0 / self.c

    @property
    def diverges_at_critical(self) -> bool:
        if self.kind == "user":
            return bool(self.user_diverges)
        if self.kind == "zeta_loglog":
            return self.e / self.c <= 1.0
        return True

    def remainder(self, s: float) -> float:
        """Approximate ``sum_{j > K} e^{-s S_j}`` (inf when divergent)."""
        if self.kind == "user":
            return float(self.user_remainder(s))
        if self.kind == "linear":
            if s <= 0:
                return math.inf
            return math.exp(-s * (self.c * (self.K + 1) + self.b)) / -math.expm1(-s * self.c)
        sc = s * self.c
        x0 = self.K + 0.5
        if self.kind == "zeta":
            if sc <= 1:
                return math.inf
            return math.exp(-s * self.b) * x0 ** (1 - sc) / (sc - 1)
        se = s * self.e
        if sc < 1 or (sc == 1 and se <= 1):
            return math.inf
        u0 = math.log(x0)

        def integrand(u):
            return math.exp(-s * self.b + u * (1 - sc) - se * math.log(u))

        val, _ = integrate.quad(integrand, u0, math.inf, limit=200)
        return val

    def describe(self) -> str:
        if self.kind == "user":
            return "user-supplied remainder"
        if self.kind == "linear":
            return f"linear: S_j ~ {self.c:.6g} j + {self.b:.6g}"
        extra = f" + {self.e:.6g} loglog j" if self.kind == "zeta_loglog" else ""
        return f"{self.kind}: S_j ~ {self.c:.6g} log j{extra} + {self.b:.6g} (K={self.K})"


def _lstsq(cols, y):
    a = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    rms = float(np.sqrt(np.mean((a @ coef - y) ** 2)))
    return coef, rms


def fit_tail_model(sups: Sequence[float], kind: str | None = None, base: Potential | None = None) -> TailModel:
    """Fit a tail model to letter sups sorted ascending, using the upper 90% of ranks.

    Raises TailModelUnavailable when the growth rate fitted on the two halves
    of the range disagrees by more than 5%, or is not positive.
    """
    s = np.sort(np.asarray(sups, dtype=float))
    K = len(s)
    if K < 20:
        raise TailModelUnavailable(f"only {K} letters; need at least 20 to fit a tail")
    j = np.arange(1, K + 1, dtype=float)
    lo = max(3, K // 10)
    jj, ss = j[lo - 1:], s[lo - 1:]
    one = np.ones_like(jj)

    def fit(kind_, sel):
        x, y, o = jj[sel], ss[sel], one[sel]
        if kind_ == "linear":
            (c, b), rms = _lstsq([x, o], y)
            return c, 0.0, b, rms
        if kind_ == "zeta_loglog":
            (c, e, b), rms = _lstsq([np.log(x), np.log(np.log(x)), o], y)
            return c, e, b, rms
        (c, b), rms = _lstsq([np.log(x), o], y)
        return c, 0.0, b, rms

    every = slice(None)
    if kind is None:
        c0, _, b0, rms0 = fit("zeta", every)
        c1, e1, b1, rms1 = fit("zeta_loglog", every)
        kind = "zeta_loglog" if (abs(e1) > 0.02 * abs(c1) and rms1 * 10 < rms0) else "zeta"
    if kind not in ("zeta", "zeta_loglog", "linear"):
        raise TailModelUnavailable(f"unknown tail model {kind!r}")
    c, e, b, rms = fit(kind, every)
    half = len(jj) // 2
    c_a = fit(kind, slice(0, half))[0]
    c_b = fit(kind, slice(half, None))[0]
    if c <= 0 or c_a <= 0 or c_b <= 0 or abs(c_a - c_b) > 0.05 * abs(c):
        raise TailModelUnavailable(f"unstable tail fit: growth {c_a:.4g} vs {c_b:.4g}")
    return TailModel(kind, float(c), float(b), K, float(e), base, fit_rms=rms)


@dataclass
class EntropyGapReport:
    d_f: float
    diverges_at_d: bool
    delta: float | None
    gap: str
    tail_model: str
    notes: list = field(default_factory=list)
    tail: TailModel | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        finite = math.isfinite(self.d_f)
        return {
            "d_f": self.d_f if finite else "finite_alphabet",
            "diverges_at_d": self.diverges_at_d,
            "delta": self.delta,
            "gap": self.gap,
            "tail_model": self.tail_model,
            "notes": list(self.notes),
        }


def critical_exponent(
    f: Potential,
    shift: TruncatedShift,
    s_bracket: tuple[float, float] = (0.0, 64.0),
    tail_model: str | TailModel | None = None,
    depth: int = 1,
) -> EntropyGapReport:
    """Critical exponent of ``Z_1(f, s) = sum_a e^{-s S(f,a)}``.

    Finite alphabets give the sentinel ``-inf`` ("finite_alphabet").  For
    countable alphabets the tail beyond the truncation comes from a tail model
    (fitted to the sorted letter sups unless one is supplied) and the exponent
    is located by bisection on the convergence of partial sum plus remainder.
    """
    if not shift.countable:
        return EntropyGapReport(-math.inf, False, None, "undetermined", "finite_alphabet")
    if isinstance(tail_model, TailModel):
        model = tail_model
    else:
        sups = [lb.upper for lb in all_letter_bounds(f, shift, depth)]
        model = fit_tail_model(sups, tail_model, base=f)
    lo, hi = s_bracket

    def converges(s):
        return math.isfinite(model.remainder(s))

    if converges(lo) or not converges(hi):
        if model.kind == "linear" and lo <= 0:
            d = 0.0
        else:
            raise TailModelUnavailable(f"convergence does not switch inside {s_bracket}")
    else:
        for _ in range(200):
            mid = (lo + hi) / 2
            if converges(mid):
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-14 * max(1.0, hi):
                break
        d = hi
    return EntropyGapReport(d, model.diverges_at_critical, None, "undetermined", model.describe(), tail=model)


# Bowen root


def solve_delta(
    f: Potential,
    shift: TruncatedShift,
    d_f: float = -math.inf,
    depth: int = 1,
    tol: float = SCALAR_TOL,
    tail: TailModel | None = None,
    spectral_tol: float | None = None,
    max_doublings: int = 60,
    op: TransferDiscretization | None = None,
) -> float:
    """Root of ``t -> P(-t f)`` above ``d_f`` by doubling then bisection.

    The pressure is the spectral pressure of the discretized operator, plus
    the tail remainder when ``tail`` applies (full shift, first-letter ``f``).
    """
    base = build_transfer(shift, f, depth) if op is None else op
    if tail is not None:
        base = base.with_tail(tail)
    stol = spectral_tol if spectral_tol is not None else min(tol, SPECTRAL_TOL) * 1e-2
    seen: list[tuple[float, float]] = []

    def pressure(t):
        p = spectral_pressure(base.scaled(-t), tol=stol).pressure
        seen.append((t, p))
        return p

    start = 0.0 if not math.isfinite(d_f) else max(d_f, 0.0)
    lo = start + 1e-9 * max(1.0, start) if math.isfinite(d_f) else start
    p_lo = pressure(lo)
    if p_lo <= 0:
        raise NoSignChange(f"P(-t f) = {p_lo:.6g} <= 0 already at t = {lo:.6g}")
    hi = max(2 * lo, 1.0)
    for _ in range(max_doublings):
        if pressure(hi) < 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise NoSignChange(f"P(-t f) stays positive up to t = {hi:.6g}")
    for _ in range(400):
        mid = (lo + hi) / 2
        p = pressure(mid)
        if p > 0:
            lo = mid
        elif p < 0:
            hi = mid
        else:
            lo = hi = mid
        if hi - lo <= 1e-3 * tol * max(1.0, hi):
            break
    _check_monotone(seen)
    return (lo + hi) / 2


def _check_monotone(samples: list[tuple[float, float]], slack: float = 1e-9) -> None:
    pts = sorted(samples)
    for (t0, p0), (t1, p1) in zip(pts, pts[1:]):
        if t1 > t0 and p1 > p0 + slack * max(1.0, abs(p0)):
            warnings.warn(f"pressure not decreasing between t={t0:.6g} and t={t1:.6g}", RuntimeWarning)
            return


def pressure_curve(f: Potential, shift: TruncatedShift, ts: Sequence[float], depth: int = 1) -> list[float]:
    """``P(-t f)`` at the given t values."""
    op = build_transfer(shift, f, depth)
    return [spectral_pressure(op.scaled(-t)).pressure for t in ts]


def entropy_gap_report(
    f: Potential,
    shift: TruncatedShift,
    depth: int = 1,
    tol: float = SCALAR_TOL,
    tail_model: str | TailModel | None = None,
) -> EntropyGapReport:
    """Classify the entropy gap at infinity of ``f``.

    ``strong``: Z_1 diverges at its critical exponent (a Bowen root above it
    must then exist).  ``weak``: a Bowen root above the critical exponent was
    found.  Finite alphabets are always ``weak`` since the critical exponent
    is ``-inf``.
    """
    notes: list[str] = []
    try:
        rep = critical_exponent(f, shift, tail_model=tail_model, depth=depth)
    except TailModelUnavailable as exc:
        return EntropyGapReport(math.nan, False, None, "undetermined", "unavailable", [str(exc)])
    tail = rep.tail if (rep.tail is not None and shift.full and depth == 1) else None
    if rep.tail is not None and tail is None:
        notes.append("tail remainder not added to the pressure (operator is not rank one)")
    try:
        delta = solve_delta(f, shift, rep.d_f, depth=depth, tol=tol, tail=tail)
    except (NoSignChange, NoConvergence) as exc:
        delta = None
        notes.append(f"no Bowen root: {exc}")
    rep.delta = delta
    rep.notes = notes
    if not math.isfinite(rep.d_f):
        rep.gap = "weak" if delta is not None else "undetermined"
        if delta is not None:
            notes.append("finite alphabet: gap conditions hold vacuously")
        return rep
    if rep.diverges_at_d:
        if delta is not None and delta > rep.d_f:
            rep.gap = "strong"
        else:
            rep.gap = "undetermined"
            notes.append("divergent letter series but no Bowen root above the critical exponent")
    elif delta is not None and delta > rep.d_f:
        rep.gap = "weak"
        notes.append("weak-only candidate: letter series converges at the critical exponent; review manually")
    else:
        rep.gap = "none"
    return rep
