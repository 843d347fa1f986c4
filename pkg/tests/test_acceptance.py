"""End-to-end acceptance checks, one test per criterion.

Each test prints ``PASS criterion N: ...`` or ``FAIL criterion N: ...`` with
its wall time; the lines are repeated in the pytest terminal summary.
"""
import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, SQRT2
from thermocount.counting import (
    RenewalQuery,
    count_orbits,
    equidistribution_ratio,
    make_query,
    renewal_count,
    renewal_equation_terms,
    sandwich_holds,
)
from thermocount.fuchsian import (
    Functional,
    attracting_flag,
    build_coding,
    cartan_projection,
    default_presentation,
    flag_image,
    fuchsian_representation,
    hilbert_length,
    iwasawa_cocycle,
    jordan_projection,
    periodic_roof_check,
    random_flag,
    random_sl,
    roof,
    roof_potential,
    sample_words,
    second_presentation,
    simple_root,
)
from thermocount.manhattan import chord_margins, intersection, trace_curve
from thermocount.potential import constant, letter_potential, log_letter, pair_potential
from thermocount.shift_core import FirstK, build_truncation, full_shift, no_aa_shift, truncate_finite
from thermocount.thermo import build_transfer, critical_exponent, entropy_gap_report, pressure_periodic, solve_delta, spectral_pressure

pytestmark = pytest.mark.acceptance

GOLDEN = (1 + math.sqrt(5)) / 2


@contextmanager
def criterion(number: int, title: str, budget: float, already: float = 0.0):
    """Time the block, record one PASS/FAIL line, re-raise any failure."""
    notes: list[str] = []
    start = time.perf_counter()
    failure = None
    try:
        yield notes
    except AssertionError as exc:
        failure = exc
    elapsed = already + time.perf_counter() - start
    if failure is None and elapsed > budget:
        failure = AssertionError(f"runtime {elapsed:.1f} s exceeds {budget:g} s")
    status = "PASS" if failure is None else "FAIL"
    detail = "; ".join(notes)
    line = f"{status} criterion {number}: {title} [{elapsed:.2f} s of {budget:g} s]"
    if detail:
        line += f" {detail}"
    if failure is not None:
        line += f" -- {failure}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    if failure is not None:
        raise failure


def bisect_root(fn, lo: float, hi: float, tol: float = 1e-15) -> float:
    """Plain bisection for a decreasing function with fn(lo) > 0 > fn(hi)."""
    assert fn(lo) > 0 > fn(hi)
    while hi - lo > tol * max(1.0, hi):
        mid = (lo + hi) / 2
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def zeta_partial(s: float, n_terms: int = 200_000) -> float:
    """Riemann zeta for s > 1: partial sum plus Euler-Maclaurin remainder."""
    n = np.arange(1, n_terms + 1, dtype=float)
    head = math.fsum(np.power(n, -s))
    N = float(n_terms)
    return head + N ** (1 - s) / (s - 1) - N ** (-s) / 2 + s * N ** (-s - 1) / 12


def test_criterion_1_pressure_exactness():
    with criterion(1, "pressure exactness", 1.0) as notes:
        full2 = truncate_finite(full_shift("ab"))
        worst = 0.0
        for ga, gb in [(0.0, 0.0), (0.3, -1.2), (1.0, SQRT2), (-2.5, 0.7)]:
            g = letter_potential({"a": ga, "b": gb})
            exact = math.log(math.exp(ga) + math.exp(gb))
            spec_p = spectral_pressure(build_transfer(full2, g)).pressure
            per_p = pressure_periodic(full2, g, "a", 20).summary
            worst = max(worst, abs(spec_p - exact), abs(per_p - exact))
        assert worst <= 1e-10, f"full 2-shift error {worst:.3g}"
        no_aa = truncate_finite(no_aa_shift())
        zero = constant(0.0)
        spec_p = spectral_pressure(build_transfer(no_aa, zero)).pressure
        per_p = pressure_periodic(no_aa, zero, "a", 40).summary
        err_aa = max(abs(spec_p - math.log(GOLDEN)), abs(per_p - math.log(GOLDEN)))
        assert err_aa <= 1e-8, f"no-aa error {err_aa:.3g}"
        notes.append(f"full-2 max error {worst:.2e}, no-aa max error {err_aa:.2e}")


def test_criterion_2_bowen_root():
    with criterion(2, "Bowen root", 1.0) as notes:
        full2 = truncate_finite(full_shift("ab"))
        worst = 0.0
        for c in (0.5, 1.0, 2.0, math.sqrt(3)):
            worst = max(worst, abs(solve_delta(constant(c), full2) - math.log(2) / c))
        assert worst <= 1e-10, f"constant roof error {worst:.3g}"
        f = letter_potential({"a": 1.0, "b": SQRT2})
        oracle = bisect_root(lambda d: math.exp(-d) + math.exp(-SQRT2 * d) - 1.0, 0.0, 5.0)
        err = abs(solve_delta(f, full2) - oracle)
        assert err <= 1e-8, f"(1, sqrt2) error {err:.3g}"
        notes.append(f"constant max error {worst:.2e}, (1,sqrt2) error {err:.2e}")


def test_criterion_3_entropy_gap():
    with criterion(3, "entropy gap", 30.0) as notes:
        shift = build_truncation(full_shift(), FirstK(100_000))
        f = log_letter(2.0, 1.0)
        rep = critical_exponent(f, shift, tail_model="zeta")
        assert abs(rep.d_f - 0.5) <= 1e-3, f"d = {rep.d_f}"
        assert rep.diverges_at_d
        gap = entropy_gap_report(f, shift, tail_model="zeta")
        oracle = bisect_root(lambda d: zeta_partial(2 * d) - 2.0, 0.51, 2.0, 1e-13)
        assert gap.delta is not None
        err = abs(gap.delta - oracle)
        assert err <= 1e-4, f"delta {gap.delta} vs zeta oracle {oracle}"
        notes.append(f"d = {rep.d_f:.6f}, delta = {gap.delta:.8f}, oracle {oracle:.8f}, gap {gap.gap}")


COUNT_GRID = [4.0, 8.0, 12.0, 16.0, 20.0, 24.0]


@pytest.fixture(scope="module")
def irrational_counts():
    start = time.perf_counter()
    shift = truncate_finite(full_shift("ab"))
    f = letter_potential({"a": 1.0, "b": SQRT2})
    delta = solve_delta(f, shift)
    recs = count_orbits(f, shift, COUNT_GRID, delta)
    return shift, f, delta, recs, time.perf_counter() - start


def test_criterion_4_counting_trend(irrational_counts):
    shift, f, delta, recs, spent = irrational_counts
    with criterion(4, "orbit counting trend", 60.0, already=spent) as notes:
        qualifying = [r for r in recs if math.exp(r.t * delta) >= 1e5]
        assert len(qualifying) >= 2, "need two grid points with e^{t delta} >= 1e5"
        for r in qualifying:
            assert 0.7 <= r.ratio_M <= 1.3, f"ratio_M {r.ratio_M:.4f} at t = {r.t}"
        assert abs(recs[-1].ratio_M - 1) < abs(qualifying[0].ratio_M - 1)
        one = constant(1.0)
        control = count_orbits(one, shift, COUNT_GRID, math.log(2))
        spread = max(r.ratio_M for r in control) - min(r.ratio_M for r in control)
        assert spread > 0.1, f"arithmetic control spread {spread:.4f}"
        ratios = ", ".join(f"t={r.t:g}: {r.ratio_M:.4f}" for r in qualifying)
        notes.append(f"{ratios}; control spread {spread:.3f}")


def test_criterion_5_sandwich(irrational_counts):
    shift, f, delta, recs, spent = irrational_counts
    with criterion(5, "prime-orbit sandwich", 60.0, already=spent) as notes:
        ok = sandwich_holds(recs, f, shift, delta)
        assert all(ok), f"sandwich fails at t = {[r.t for r, k in zip(recs, ok) if not k]}"
        notes.append(f"holds at {len(ok)} grid points")


def _random_query(rng: np.random.Generator, shift, letters):
    prefix = [letters[rng.integers(len(letters))]]
    weight = None
    q = make_query(shift, prefix, float(rng.uniform(0.0, 9.0)))
    if rng.random() < 0.5:
        weight = q.point[: int(rng.integers(1, 3))]
    return RenewalQuery(q.point, q.t, weight)


def test_criterion_6_renewal_equation_and_bound():
    with criterion(6, "renewal equation and bound", 30.0) as notes:
        rng = np.random.default_rng(2024)
        full2 = truncate_finite(full_shift("ab"))
        no_aa = truncate_finite(no_aa_shift())
        cases = [
            (full2, letter_potential({"a": 1.0, "b": SQRT2})),
            (full2, pair_potential({("a", "a"): 0.7, ("a", "b"): 1.3, ("b", "a"): 0.9, ("b", "b"): SQRT2})),
            (no_aa, letter_potential({"a": 0.6, "b": 1.1})),
        ]
        for k in range(20):
            shift, f = cases[k % len(cases)]
            q = _random_query(rng, shift, shift.letters)
            lhs, rhs = renewal_equation_terms(f, q, shift)
            assert lhs == rhs, f"query {k}: {lhs} != {rhs}"
        # N_f(1, x, t) jumps at t = i + j sqrt2; take the value just past each jump
        f = cases[0][1]
        delta = solve_delta(f, full2)
        x = make_query(full2, ["a"], 0.0).point
        jumps = sorted({i + j * SQRT2 for i in range(15) for j in range(11) if i + j * SQRT2 <= 14.0})

        def scaled(t):
            n, _ = renewal_count(f, RenewalQuery(x, t + 1e-9), full2)
            return n * math.exp(-t * delta)

        early = max(scaled(t) for t in jumps if t <= 6.0)
        late = max(scaled(t) for t in jumps if t > 6.0)
        # 5% headroom: the step function keeps oscillating before it settles
        bound = 1.05 * early
        assert late <= bound, f"sup on (6, 14] = {late:.5f} exceeds fitted {bound:.5f}"
        notes.append(f"20/20 exact; sup t<=6 {early:.4f}, fitted C {bound:.4f}, sup 6<t<=14 {late:.4f}")


def test_criterion_7_equidistribution():
    with criterion(7, "equidistribution", 60.0) as notes:
        shift = truncate_finite(full_shift("ab"))
        f = letter_potential({"a": 1.0, "b": SQRT2})
        g = letter_potential({"a": SQRT2, "b": 1.0})
        delta = solve_delta(f, shift)
        t = 100.0
        lhs, pred = equidistribution_ratio(f, g, shift, t, delta)
        assert abs(lhs / pred - 1) <= 0.15, f"ratio {lhs / pred:.4f} at t = {t}"
        same, pred_same = equidistribution_ratio(f, f, shift, 40.0, delta)
        M = float(count_orbits(f, shift, [40.0], delta)[0].M)
        assert same == M, "g = f branch differs from the orbit count"
        notes.append(f"t = {t:g}: ratio {lhs / pred:.4f}; g = f branch equals M(40) exactly")


def test_criterion_8_manhattan_suite():
    with criterion(8, "Manhattan suite", 120.0) as notes:
        full2 = truncate_finite(full_shift("ab"))
        no_aa = truncate_finite(no_aa_shift())
        f = letter_potential({"a": 1.0, "b": SQRT2})
        g = letter_potential({"a": SQRT2, "b": 1.0})
        pairs = [
            ("f,g", full2, f, g),
            ("f,2f", full2, f, f * 2.0),
            ("f,1", full2, f, constant(1.0)),
            ("no-aa", no_aa, letter_potential({"a": 0.5, "b": 1.5}), letter_potential({"a": 1.2, "b": 0.4})),
        ]
        worst_end, worst_margin, Js = 0.0, math.inf, {}
        for name, shift, p, q in pairs:
            pts = trace_curve(p, q, shift, rays=17)
            assert all(pt.crossed for pt in pts)
            end = max(abs(pts[0].a - solve_delta(p, shift)), abs(pts[-1].b - solve_delta(q, shift)),
                      abs(pts[0].b), abs(pts[-1].a))
            worst_end = max(worst_end, end)
            margins = chord_margins(pts)
            worst_margin = min(worst_margin, min(margins))
            if name == "f,2f":
                slopes = [pt.slope for pt in pts]
                assert max(abs(s + 0.5) for s in slopes) <= 1e-8, "g = 2f slope is not -1/2"
                assert max(abs(m) for m in margins) <= 1e-8, "g = 2f curve is not straight"
            Js[name] = intersection(p, q, shift).J
        assert worst_end <= 2e-8, f"endpoint error {worst_end:.3g}"
        assert worst_margin >= -1e-10, f"chord test fails by {worst_margin:.3g}"
        assert min(Js.values()) >= 1 - 1e-8, f"J below 1: {Js}"
        assert abs(Js["f,2f"] - 1) <= 1e-6
        assert Js["f,g"] - 1 > 1e-3
        notes.append(f"endpoint error {worst_end:.1e}; min chord margin {worst_margin:.1e}; "
                     + ", ".join(f"J({k}) = {v:.6f}" for k, v in Js.items()))


def _cyclic_words(coding, letters, max_len):
    """Admissible cyclic words, one representative per rotation class."""
    seen = set()
    for n in range(1, max_len + 1):
        for w in itertools.product(letters, repeat=n):
            if all(coding.allowed(w[i], w[(i + 1) % n]) for i in range(n)):
                seen.add(min(w[i:] + w[:i] for i in range(n)))
    return sorted(seen, key=lambda w: (len(w), w))


def test_criterion_9_roof_identities():
    with criterion(9, "roof-function identities", 30.0) as notes:
        pres = default_presentation()
        coding = build_coding(pres)
        words = _cyclic_words(coding, coding.letters_up_to(3), 4)
        checked, worst = 0, 0.0
        for d in (2, 3):
            rho = fuchsian_representation(pres, d)
            for phi in (simple_root(1, d), hilbert_length(d)):
                for w in words:
                    total, target, err = periodic_roof_check(rho, coding, phi, w)
                    assert abs(total - target) <= err, f"word {w}, d = {d}: {total} vs {target} (err {err:.2e})"
                    worst = max(worst, abs(total - target) / err)
                    checked += 1
        rng = np.random.default_rng(99)
        for _ in range(100):
            S, T, K = random_sl(rng, 3), random_sl(rng, 3), random_flag(rng, 3)
            lhs = iwasawa_cocycle(S @ T, K)
            rhs = iwasawa_cocycle(S, flag_image(T, K)) + iwasawa_cocycle(T, K)
            assert np.max(np.abs(lhs - rhs)) <= 1e-9, "cocycle law"
        anchors = 0
        while anchors < 100:
            A = random_sl(rng, 3)
            if np.any(np.abs(np.linalg.eigvals(A).imag) > 1e-9):
                continue  # the attracting flag needs a real spectrum
            diff = iwasawa_cocycle(A, attracting_flag(A)) - jordan_projection(A)
            assert np.max(np.abs(diff)) <= 1e-9, "cocycle at the attracting flag"
            anchors += 1
        for _ in range(100):
            A, K = random_sl(rng, 3), random_flag(rng, 3)
            assert np.linalg.norm(iwasawa_cocycle(A, K)) <= np.linalg.norm(cartan_projection(A)) + 1e-9
        notes.append(f"{len(words)} cyclic words x 4 settings = {checked} identities, "
                     f"worst |gap|/err {worst:.1e}; 300 random matrix checks")


def test_criterion_10_hitchin_gap():
    with criterion(10, "Hitchin gap formula", 120.0) as notes:
        coding = build_coding(default_presentation())
        rho = fuchsian_representation(default_presentation(), 3)
        phi = Functional((1.0, 1.0), "alpha")
        rep = critical_exponent(roof_potential(rho, coding, phi), coding.truncation(400), tail_model="zeta")
        assert abs(rep.d_f - 0.25) <= 0.05 * 0.25, f"d = {rep.d_f}"
        second = build_coding(second_presentation())
        eta = fuchsian_representation(second_presentation(), 3)
        rng = np.random.default_rng(5)

        def gaps(max_power, count):
            diff, size = [], []
            for w in sample_words(coding, rng, 12, max_power, count):
                a, _ = roof(rho, coding, phi, w)
                b, _ = roof(eta, second, phi, w)
                diff.append(abs(a - b))
                size.append(abs(a))
            return max(diff), max(size)

        # the constant is fitted on small powers, then tested on powers up to 10^4
        calib, _ = gaps(10, 200)
        C = 1.1 * calib
        worst, largest = gaps(10_000, 1000)
        assert worst <= C, f"difference {worst:.4f} exceeds C = {C:.4f}"
        assert largest > 2 * C, "sampled roofs too small for the check to mean anything"
        notes.append(f"d = {rep.d_f:.5f}; max |difference| {worst:.4f} <= C = {C:.4f} "
                     f"while max roof {largest:.2f}")
