import math
from fractions import Fraction
from itertools import product as iproduct

import pytest
from hypothesis import given, settings, strategies as st

from hopfck.forest_core import LEAF, Forest, ladder, tree_factorial, trees_up_to
from hopfck.hopf_ck import Elem, coproduct, product
from hopfck.lambda_arrays import extract_lambda
from hopfck.rge import (
    BetaSystem,
    Char,
    LPoly,
    RGEError,
    c_triangle,
    feynman_phi,
    feynman_phi_oracle,
    fit_beta,
    green_function,
    grge_residual,
    phi_bivariate,
)
from hopfck.sequences import (
    family_cm,
    family_corollas,
    family_dse_ab,
    family_ladders,
    family_prelie_ext,
    family_zn,
)

from strategies import elems

GENERIC = Char.generic(8)
TF = Char.tree_factorial()


def prelie_ext(N):
    return family_prelie_ext([Elem.tree(LEAF), Elem.tree(ladder(2))], Elem.parse("2*o[o] - o*o"), N)


@pytest.mark.parametrize("sigma", [Char.random(s, 6) for s in (1, 2, 3)] + [GENERIC], ids=lambda c: c.name)
def test_phi_matches_convolution_exponential(sigma):
    for t in trees_up_to(6):
        assert feynman_phi(sigma, t) == feynman_phi_oracle(sigma, t), t


def test_tree_factorial_rules():
    for t in trees_up_to(6):
        assert feynman_phi(TF, t) == LPoly.monomial(t.size, Fraction(1, tree_factorial(t)))


@settings(max_examples=20)
@given(elems, elems)
def test_phi_is_multiplicative(x, y):
    assert feynman_phi(GENERIC, product(x, y)) == feynman_phi(GENERIC, x) * feynman_phi(GENERIC, y)


@settings(max_examples=15)
@given(elems, st.fractions(-3, 3), st.fractions(-3, 3))
def test_phi_turns_coproduct_into_shift(x, l1, l2):
    # phi_{L1 + L2} = m (phi_{L1} (x) phi_{L2}) Delta
    lhs = feynman_phi(GENERIC, x)(l1 + l2)
    biv = phi_bivariate(GENERIC, x)
    rhs = sum((c * l1**a * l2**b for (a, b), c in biv.items()), Fraction(0))
    assert lhs == rhs


def _compositions(n, k):
    if k == 0:
        if n == 0:
            yield ()
        return
    for first in range(1, n - k + 2):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


@pytest.mark.parametrize("sigma", [GENERIC, Char.random(7, 7)], ids=lambda c: c.name)
def test_ladder_green_function_is_exponential(sigma):
    g = green_function(sigma, family_ladders(7))
    for n in range(1, 8):
        expected = LPoly(
            sum(
                (math.prod(sigma(ladder(p)) for p in comp) for comp in _compositions(n, k)),
                Fraction(0),
            ) / math.factorial(k)
            for k in range(n + 1)
        )
        assert g.G(n) == expected


def test_c_triangle_oracle():
    assert c_triangle(family_cm(7), GENERIC).oracle == "agree"
    assert c_triangle(family_zn(3, 2, 7), GENERIC).oracle == "agree"
    assert c_triangle(family_ladders(6), Char({ladder(2): 1})).oracle == "disabled"
    # the L^3 coefficient of phi(t_3) cancels here, so rows from 4 on are only checked for consistency
    tri = c_triangle(prelie_ext(7), GENERIC)
    assert feynman_phi(GENERIC, prelie_ext(3).t(3)).degree < 3
    assert tri.oracle == "rank-deficient" and tri.deficient_rows == (4, 5, 6, 7)


def test_c_triangle_from_structure_constants():
    s = family_cm(6)
    tri = c_triangle(s, GENERIC)
    lam = extract_lambda(s)
    assert tri(5, 2) == lam(2, 3) * GENERIC.on_elem(s.t(3))
    assert tri.diagonal(1) == [tri(i + 1, i) for i in range(1, 6)]


def _fits(s, sigma, m, scale=1):
    tri = c_triangle(s, sigma)
    fr = fit_beta(tri, m, scale)
    res = grge_residual(green_function(sigma, s, scale), fr.system)
    return fr, not any(res)


STRONG = [
    ("ladders", lambda: family_ladders(8), 0),
    ("zn32", lambda: family_zn(3, 2, 8), 0),
    ("dse-ab", lambda: family_dse_ab(2, 3, 8), 1),
    ("corollas-k0", lambda: family_corollas(0, 8), 1),
    ("corollas-k1", lambda: family_corollas(1, 8), 2),
    ("corollas-k2", lambda: family_corollas(2, 8), 3),
]


@pytest.mark.parametrize("name, make, m", STRONG, ids=[x[0] for x in STRONG])
def test_strong_families_fit_at_their_order(name, make, m):
    s = make()
    for sigma in (GENERIC, Char.random(11, 8)):
        fr, zero = _fits(s, sigma, m)
        assert fr.ok and zero
        if m:
            assert not _fits(s, sigma, m - 1)[0].ok


def test_ladders_homogeneous_zn_not():
    assert _fits(family_ladders(8), GENERIC, 0)[0].system.homogeneous
    assert not _fits(family_zn(3, 2, 8), GENERIC, 0)[0].system.homogeneous


def test_dse_homogeneous_with_matching_scale():
    # lam = a i + b extends homogeneously with lam(0, j) = b
    fr, zero = _fits(family_dse_ab(2, 3, 7), GENERIC, 1, scale=3)
    assert fr.ok and zero and fr.system.homogeneous


def test_scaled_corolla_has_anomalous_term():
    fr, zero = _fits(family_corollas(1, 7), GENERIC, 2)
    assert fr.ok and zero and not fr.system.homogeneous


@pytest.mark.parametrize("m", range(4))
def test_cm_no_low_order_equation(m):
    fr, _ = _fits(family_cm(8), GENERIC, m)
    assert not fr.ok and fr.witness is not None


def test_cm_weak_second_order_under_tree_factorial():
    fr, zero = _fits(family_cm(8), TF, 2)
    assert fr.ok and zero
    assert not _fits(family_cm(8), TF, 1)[0].ok


def test_residual_detects_perturbation():
    fr, _ = _fits(family_ladders(6), GENERIC, 0)
    g = list(fr.system.gamma0)
    g[3] += 1
    bad = BetaSystem(fr.system.m, fr.system.beta, tuple(g), fr.system.N)
    res = grge_residual(green_function(GENERIC, family_ladders(6)), bad)
    assert res[3] and not res[2]


def test_serialization():
    fr, _ = _fits(family_corollas(1, 7), GENERIC, 2)
    assert BetaSystem.from_json(fr.system.to_json()) == fr.system
    sig = Char.random(5, 5)
    assert Char.from_json(sig.to_json()) == sig
    p = LPoly([1, 0, Fraction(-2, 3)])
    assert LPoly.from_json(p.to_json()) == p


def test_lpoly_arithmetic():
    p = LPoly([1, 2])
    assert p * p == LPoly([1, 4, 4])
    assert (p * p).derivative() == LPoly([4, 8])
    assert p(Fraction(1, 2)) == 2
    assert (p - p).degree == -1
    assert str(LPoly([0, 1, 3])) == "1*L + 3*L^2"


def test_fit_rejects_negative_order():
    with pytest.raises(RGEError):
        fit_beta(c_triangle(family_ladders(4), GENERIC), -1)


def test_random_char_is_seeded():
    assert Char.random(3, 5) == Char.random(3, 5)
    assert Char.random(3, 5)(LEAF) != 0
