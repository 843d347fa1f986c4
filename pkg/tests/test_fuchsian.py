import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermocount.errors import InvalidInput, NumericallySingular, PingPongFailure
from thermocount.fuchsian import (
    Arc,
    Functional,
    MobiusMap,
    attracting_flag,
    build_coding,
    cartan_projection,
    default_presentation,
    fuchsian_representation,
    fundamental_weight,
    hilbert_length,
    iwasawa_cocycle,
    flag_image,
    jordan_projection,
    omega_endpoint,
    periodic_roof_check,
    presentation_from_config,
    projections,
    random_flag,
    random_sl,
    roof,
    rotation,
    second_presentation,
    simple_root,
    standard_flag,
    sym_power,
    x_to_angle,
    _presentation,
)

T_H = 2 * math.log((3 + math.sqrt(5)) / 2)


@pytest.fixture(scope="module")
def coding():
    return build_coding(default_presentation())


def circle_distance(x, y):
    d = abs(x - y) % math.pi
    return min(d, math.pi - d)


# projections and functionals


def test_projections_diagonal():
    l, k = projections(np.diag([2.0, 0.5]))
    assert l == pytest.approx([math.log(2), -math.log(2)])
    assert k == pytest.approx([math.log(2), -math.log(2)])


def test_projections_triangular():
    l, k = projections([[2.0, 1.0], [0.0, 0.5]])
    # sigma_1^2 is the larger root of mu + 1/mu = trace(A A^T) = 5.25
    mu = (5.25 + math.sqrt(5.25 ** 2 - 4)) / 2
    assert l == pytest.approx([math.log(2), -math.log(2)])
    assert k == pytest.approx([0.5 * math.log(mu), -0.5 * math.log(mu)], abs=1e-12)


def test_projections_identity():
    l, k = projections(np.eye(3))
    assert np.allclose(l, 0) and np.allclose(k, 0)


def test_projections_reject_non_unimodular():
    with pytest.raises(NumericallySingular):
        projections(np.diag([2.0, 2.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_projections_sum_to_zero_and_jordan_below_cartan(seed, d):
    A = random_sl(np.random.default_rng(seed), d)
    l, k = projections(A)
    assert abs(l.sum()) < 1e-10 and abs(k.sum()) < 1e-10
    assert l[0] <= k[0] + 1e-9


def test_functionals():
    a = np.array([3.0, 1.0, -4.0])
    assert simple_root(1, 3)(a) == 2.0 and simple_root(2, 3)(a) == 5.0
    assert fundamental_weight(1, 3)(a) == 3.0 and fundamental_weight(2, 3)(a) == 4.0
    assert hilbert_length(3)(a) == 7.0
    assert Functional((1.0, 2.0), "alpha").alpha_sum() == 3.0
    with pytest.raises(InvalidInput):
        hilbert_length(3)(np.zeros(2))


# Iwasawa cocycle


def test_cocycle_diagonal():
    t = 0.7
    b = iwasawa_cocycle(np.diag([math.exp(t), math.exp(-t)]), standard_flag(2))
    assert b == pytest.approx([t, -t])


def test_cocycle_identity():
    K = random_flag(np.random.default_rng(1), 4)
    assert np.allclose(iwasawa_cocycle(np.eye(4), K), 0, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_cocycle_law(seed):
    rng = np.random.default_rng(seed)
    S, T, K = random_sl(rng, 3), random_sl(rng, 3), random_flag(rng, 3)
    lhs = iwasawa_cocycle(S @ T, K)
    rhs = iwasawa_cocycle(S, flag_image(T, K)) + iwasawa_cocycle(T, K)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_cocycle_anchor_and_norm_bound(seed):
    rng = np.random.default_rng(seed)
    A = random_sl(rng, 3)
    w = np.linalg.eigvals(A)
    if np.any(np.abs(w.imag) > 1e-9):
        A = A @ A.T  # symmetric, so real spectrum
    K = random_flag(rng, 3)
    assert np.linalg.norm(iwasawa_cocycle(A, K)) <= np.linalg.norm(cartan_projection(A)) + 1e-9
    assert iwasawa_cocycle(A, attracting_flag(A)) == pytest.approx(jordan_projection(A), abs=1e-9)


# symmetric powers


def test_sym_power_diagonal():
    assert np.allclose(sym_power(np.diag([2.0, 0.5]), 3), np.diag([4.0, 1.0, 0.25]))


def test_sym_power_unipotent_single_block():
    U = sym_power(np.array([[1.0, 1.0], [0.0, 1.0]]), 3)
    N = U - np.eye(3)
    assert np.allclose(np.diag(U), 1) and np.allclose(np.tril(U, -1), 0)
    assert np.abs(N @ N).max() > 0.5 and np.allclose(N @ N @ N, 0)


def test_sym_power_hyperbolic_roots():
    l = jordan_projection(sym_power(np.array([[2.0, 1.0], [1.0, 1.0]]), 3))
    assert simple_root(1, 3)(l) == pytest.approx(T_H, abs=1e-12)
    assert simple_root(2, 3)(l) == pytest.approx(T_H, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_sym_power_is_a_homomorphism(seed, d):
    rng = np.random.default_rng(seed)
    A, B = random_sl(rng, 2, 0.5), random_sl(rng, 2, 0.5)
    assert np.allclose(sym_power(A @ B, d), sym_power(A, d) @ sym_power(B, d), atol=1e-9)
    assert np.linalg.det(sym_power(A, d)) == pytest.approx(1.0)


@settings(max_examples=30)
@given(st.floats(-10, 10), st.integers(2, 7))
def test_sym_power_of_rotation_is_orthogonal(theta, d):
    R = sym_power(rotation(theta), d)
    assert np.allclose(R.T @ R, np.eye(d), atol=1e-12)


# Möbius maps and arcs


def test_mobius_kinds():
    h = MobiusMap.of([[2, 1], [1, 1]])
    assert h.kind == "hyperbolic" and h.translation_length == pytest.approx(T_H)
    assert MobiusMap.of([[1, 6], [0, 1]]).kind == "parabolic"
    assert MobiusMap.of(rotation(0.4)).kind == "elliptic"
    assert MobiusMap.of(np.eye(2)).kind == "identity"
    with pytest.raises(InvalidInput):
        MobiusMap.of([[2, 0], [0, 2]])


def test_arc_geometry():
    arc = Arc.from_x(1.0, 3.0)
    assert arc.contains(x_to_angle(2.0)) and not arc.contains(x_to_angle(4.0))
    comp = arc.complement()
    assert comp.contains(x_to_angle(4.0)) and comp.length == pytest.approx(math.pi - arc.length)
    assert not arc.interiors_overlap(Arc.from_x(3.0, 5.0))
    assert Arc.from_x(3.5, math.inf).contains(x_to_angle(1e9))


@settings(max_examples=40)
@given(st.floats(-5, 5), st.floats(0.01, 3))
def test_arc_image_matches_endpoints(lo, width):
    A = np.array([[2.0, 1.0], [1.0, 1.0]])
    arc = Arc.from_x(lo, lo + width)
    img = arc.image(A)
    g = MobiusMap.of(A)
    assert circle_distance(img.start, g.act(arc.start)) < 1e-9
    assert circle_distance(img.end, g.act(arc.end)) < 1e-9
    assert img.contains(g.act(arc.center), tol=1e-9)


# coding


def test_default_presentation_checks():
    assert default_presentation().check() == []
    assert second_presentation().check() == []


def test_alphabet_and_return_times(coding):
    names = [str(coding.letter(i)) for i in coding.letters_up_to(3)]
    assert names == ["h^1", "h^-1", "p^1", "p^-1", "p^2", "p^-2", "p^3", "p^-3"]
    for n in range(1, 20):
        assert coding.letter(coding.id_of("p", n)).r == n + 1
        assert coding.letter(coding.id_of("p", -n)).r == n + 1
    assert coding.letter(coding.parse("h")).r == 1 and coding.letter(1).s is None
    assert coding.parse("p^-3") == coding.id_of("p", -3)


def test_decomposition_as_matrices(coding):
    pres = coding.presentation
    for i in coding.letters_up_to(6):
        a = coding.letter(i)
        (g, e) = a.g_a
        M = pres.element((g, e)).matrix
        if a.s is not None:
            s_gen, s_exp = a.decomposition()[0]
            M = pres.generators[s_gen].power(s_exp).matrix @ M
        assert np.allclose(M, coding.G(i))


def test_transition_rule(coding):
    p = [coding.id_of("p", n) for n in (1, -1, 2, -2, 5)]
    for a, b in itertools.product(p, p):
        assert not coding.allowed(a, b)
    h, hi = coding.parse("h"), coding.parse("h^-1")
    assert not coding.allowed(h, hi) and not coding.allowed(hi, h)
    assert coding.allowed(h, h) and all(coding.allowed(h, x) and coding.allowed(x, hi) for x in p)


def test_multiplicity_bound(coding):
    assert coding.multiplicity_bound(50) == 2


def test_no_parabolic_cyclic_words(coding):
    shift = coding.truncation(3)
    letters = shift.letters
    for n in range(1, 5):
        for w in itertools.product(letters, repeat=n):
            if coding.is_admissible(w, cyclic=True):
                assert abs(np.trace(coding.product(w))) > 2 + 1e-9


def test_two_hyperbolic_generators_rejected():
    pres = default_presentation()
    pres.hyperbolic["k"] = MobiusMap.of([[3, 4], [2, 3]])
    del pres.parabolic["p"]
    for s in (1, -1):
        pres.intervals[("k", s)] = pres.intervals.pop(("p", s))
    with pytest.raises(PingPongFailure, match="parabolic"):
        build_coding(pres)


def test_non_free_parabolic_rejected():
    pres = _presentation([[2, 1], [1, 1]], [[1, 2], [0, 1]],
                         [(1.0, 3.0), (-2.0, 0.0)], [(3.5, math.inf), (-math.inf, -2.5)], "bad")
    with pytest.raises(PingPongFailure):
        build_coding(pres)


def test_presentation_from_config_matches_default():
    cfg = {
        "hyperbolic": {"h": [[2, 1], [1, 1]]},
        "parabolic": {"p": [[1, 6], [0, 1]]},
        "intervals": {"h": {"x": [1, 3]}, "h^-1": {"x": [-2, 0]},
                      "p": {"x": [3.5, math.inf]}, "p^-1": {"x": [-math.inf, -2.5]}},
    }
    pres = presentation_from_config(cfg)
    assert pres.check() == []
    c = build_coding(pres)
    assert c.successor_region(1) == build_coding(default_presentation()).successor_region(1)


# limit points


def test_omega_hyperbolic_power(coding):
    h = coding.parse("h")
    target = MobiusMap.of(coding.G(h)).attracting_angle()
    radii = []
    for n in (5, 10, 20):
        c, r = omega_endpoint(coding, [h] * n)
        assert circle_distance(c, target) <= r + 1e-15
        radii.append(r)
    assert radii[0] > radii[1] > radii[2] and radii[2] < 1e-15 + radii[0] * 1e-6


def test_omega_single_letter(coding):
    for i in coding.letters_up_to(4):
        c, _ = omega_endpoint(coding, [i])
        assert coding.target(i).contains(c)


def test_omega_periodic_word_is_fixed_point(coding):
    h, p = coding.parse("h"), coding.parse("p")
    (a, b), (c, d) = coding.product([h, p])
    # attracting root of c z^2 + (d - a) z - b = 0
    roots = np.roots([c, d - a, -b])
    deriv = [1 / (c * z + d) ** 2 for z in roots]
    z = roots[int(np.argmin(np.abs(deriv)))].real
    center, r = omega_endpoint(coding, [h, p] * 15)
    assert circle_distance(center, x_to_angle(z)) <= r + 1e-12


# representations and roofs


@pytest.mark.parametrize("d", [2, 3, 5])
def test_structural_jordan_projection(coding, d):
    rho = fuchsian_representation(default_presentation(), d)
    M = coding.product([coding.parse("h"), coding.parse("p")])
    assert rho.jordan(M) == pytest.approx(jordan_projection(rho.of_matrix(M)), abs=1e-8)


def test_parabolic_images_are_single_jordan_blocks():
    for d in (2, 3, 4):
        fuchsian_representation(default_presentation(), d).check_parabolics()


def test_roof_hyperbolic_periodic(coding):
    h = coding.parse("h")
    rho2 = fuchsian_representation(default_presentation(), 2)
    v, e = roof(rho2, coding, simple_root(1, 2), [h] * 40)
    assert abs(v - T_H) <= e + 1e-9
    rho3 = fuchsian_representation(default_presentation(), 3)
    v, e = roof(rho3, coding, hilbert_length(3), [h] * 40)
    assert abs(v - 2 * T_H) <= e + 1e-9


@pytest.mark.parametrize("word", [["h", "p"], ["h", "h", "p^-3"], ["p^2", "h^-1", "p^-1", "h^-1"]])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_periodic_roof_identity(coding, word, d):
    rho = fuchsian_representation(default_presentation(), d)
    total, target, err = periodic_roof_check(rho, coding, hilbert_length(d), [coding.parse(x) for x in word])
    assert abs(total - target) <= err


def test_parabolic_cartan_growth():
    p = np.array([[1.0, 6.0], [0.0, 1.0]])
    vals = []
    for n in (10, 100, 1000, 10_000):
        k = cartan_projection(sym_power(np.linalg.matrix_power(p, n), 3))
        vals.append(simple_root(1, 3)(k) - 2 * math.log(n))
    assert max(vals) - min(vals) < 0.05


def test_parabolic_roof_growth(coding):
    rho = fuchsian_representation(default_presentation(), 3)
    h = coding.parse("h")
    vals = []
    for n in (10, 100, 1000, 10_000):
        v, _ = roof(rho, coding, hilbert_length(3), [coding.id_of("p", n)] + [h] * 30)
        vals.append(v - 4 * math.log(n + 1))
    assert max(vals) - min(vals) < 0.5


def test_roof_dimension_mismatch(coding):
    rho = fuchsian_representation(default_presentation(), 3)
    with pytest.raises(InvalidInput):
        roof(rho, coding, hilbert_length(2), [1, 1])
