import math
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given

from hopfck.forest_core import LEAF, Forest, Tree, corolla, ladder, parse_tree, trees_up_to
from hopfck.hopf_ck import (
    ONE_FOREST,
    Elem,
    SeriesElem,
    TensorElem,
    antipode,
    bplus,
    coproduct,
    counit,
    growth_N,
    prelie_graft,
    product,
    series_exp,
    series_log,
    series_mul,
)

from oracles import brute_antipode_terms
from strategies import elems, forests, trees

SMALL_FORESTS = [Forest((t,)) for t in trees_up_to(6)] + [
    Forest((a, b)) for a in trees_up_to(3) for b in trees_up_to(3)
]


def triple_left(x):
    """(Delta (x) id) Delta x as a dict over forest triples."""
    acc = defaultdict(Fraction)
    for (a, b), c in coproduct(x).terms.items():
        for (a1, a2), d in coproduct(Elem.forest(a)).terms.items():
            acc[(a1, a2, b)] += c * d
    return {k: v for k, v in acc.items() if v}


def triple_right(x):
    acc = defaultdict(Fraction)
    for (a, b), c in coproduct(x).terms.items():
        for (b1, b2), d in coproduct(Elem.forest(b)).terms.items():
            acc[(a, b1, b2)] += c * d
    return {k: v for k, v in acc.items() if v}


def convolve(f_left, f_right, x):
    """m (f_left (x) f_right) Delta x."""
    out = Elem()
    for (a, b), c in coproduct(x).terms.items():
        out = out + product(f_left(Elem.forest(a)), f_right(Elem.forest(b))).scale(c)
    return out


@pytest.mark.parametrize("f", SMALL_FORESTS, ids=str)
def test_coassociative(f):
    assert triple_left(Elem.forest(f)) == triple_right(Elem.forest(f))


@pytest.mark.parametrize("f", SMALL_FORESTS, ids=str)
def test_counit(f):
    x = Elem.forest(f)
    left = TensorElem(coproduct(x).terms).map_left(lambda a: Elem.one().scale(counit(Elem.forest(a))))
    assert left.multiply() == x
    right = coproduct(x).map_right(lambda b: Elem.one().scale(counit(Elem.forest(b))))
    assert right.multiply() == x


@pytest.mark.parametrize("f", SMALL_FORESTS, ids=str)
def test_antipode_is_convolution_inverse(f):
    x = Elem.forest(f)
    unit = Elem.one().scale(counit(x))
    assert convolve(antipode, lambda y: y, x) == unit
    assert convolve(lambda y: y, antipode, x) == unit


@pytest.mark.parametrize("t", list(trees_up_to(6)), ids=str)
def test_antipode_matches_all_edge_subsets_formula(t):
    assert antipode(Elem.tree(t)) == Elem(brute_antipode_terms(t))


@pytest.mark.parametrize("f", [f for f in SMALL_FORESTS if sum(t.size for t in f) <= 5], ids=str)
def test_bplus_cocycle(f):
    x = Elem.forest(f)
    lhs = coproduct(bplus(x))
    rhs = TensorElem.pure(bplus(x), Elem.one()) + coproduct(x).map_right(lambda b: bplus(Elem.forest(b)))
    assert lhs == rhs


def test_bplus_of_unit_is_leaf():
    assert bplus(Elem.one()) == Elem.tree(LEAF)


@pytest.mark.parametrize("n", range(1, 7))
def test_ladder_coproduct(n):
    def lad(k):
        return Elem.one() if k == 0 else Elem.tree(ladder(k))

    expected = TensorElem()
    for k in range(n + 1):
        expected = expected + TensorElem.pure(lad(k), lad(n - k))
    assert coproduct(Elem.tree(ladder(n))) == expected


@pytest.mark.parametrize("n", range(1, 7))
def test_corolla_coproduct(n):
    c = Elem.tree(corolla(n))
    expected = TensorElem.pure(c, Elem.one()) + TensorElem.pure(Elem.one(), c)
    for i in range(1, n):
        leaves = Elem.forest(Forest([LEAF] * i))
        expected = expected + TensorElem.pure(leaves, Elem.tree(corolla(n - i))).scale(math.comb(n - 1, i))
    assert coproduct(c) == expected


@given(elems, elems)
def test_coproduct_is_multiplicative(x, y):
    from hopfck.hopf_ck import tensor_product

    assert coproduct(product(x, y)) == tensor_product(coproduct(x), coproduct(y))


@given(elems, elems)
def test_antipode_is_multiplicative(x, y):
    assert antipode(product(x, y)) == product(antipode(x), antipode(y))


@given(elems)
def test_antipode_is_an_involution(x):
    # the algebra is commutative
    assert antipode(antipode(x)) == x


@given(trees, trees, trees)
def test_grafting_is_prelie(a, b, c):
    x, y, z = Elem.tree(a), Elem.tree(b), Elem.tree(c)

    def assoc(p, q, r):
        return prelie_graft(prelie_graft(p, q), r) - prelie_graft(p, prelie_graft(q, r))

    assert assoc(x, y, z) == assoc(x, z, y)


@given(trees)
def test_growth_is_grafting_a_leaf(t):
    assert growth_N(Elem.tree(t)) == prelie_graft(Elem.tree(t), Elem.tree(LEAF))


def test_growth_examples():
    assert growth_N(Elem.parse("o[o]")) == Elem.parse("o[o,o] + o[o[o]]")
    assert growth_N(Elem.parse("o[o,o]")) == Elem.parse("o[o,o,o] + 2*o[o,o[o]]")


@given(elems)
def test_text_and_json_roundtrip(x):
    assert Elem.parse(str(x)) == x
    assert Elem.from_json(x.to_json()) == x


@given(elems)
def test_tensor_json_roundtrip(x):
    d = coproduct(x)
    assert TensorElem.from_json(d.to_json()) == d


def test_parse_accepts_loose_syntax():
    x = Elem.parse("2*o[o] - o*o")
    assert x.coefficient(Forest((parse_tree("o[o]"),))) == 2
    assert x.coefficient(Forest((LEAF, LEAF))) == -1
    assert Elem.parse("3 - 1/2 * o") == Elem.one().scale(3) - Elem.tree(LEAF).scale(Fraction(1, 2))
    with pytest.raises(ValueError):
        Elem.parse("o +")


def test_exp_log_roundtrip():
    X = SeriesElem([Elem.one()] + [Elem.tree(t) for t in (LEAF, ladder(2), ladder(3), corolla(4))], 4)
    assert series_exp(series_log(X)) == X


def test_series_mul_truncates():
    a = SeriesElem([Elem.one(), Elem.tree(LEAF)], 2)
    sq = series_mul(a, a)
    assert sq[2] == Elem.forest(Forest((LEAF, LEAF)))
    assert sq[1] == Elem.tree(LEAF).scale(2)


def test_counit_and_zero():
    assert counit(Elem.one().scale(5)) == 5
    assert counit(Elem.tree(LEAF)) == 0
    assert coproduct(Elem()) == TensorElem()
    assert Elem.one().terms == {ONE_FOREST: 1}
