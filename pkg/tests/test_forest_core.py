import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hopfck import forest_core
from hopfck.forest_core import (
    LEAF,
    BoundExceededError,
    Forest,
    Tree,
    TreeSyntaxError,
    admissible_cuts,
    corolla,
    enumerate_trees,
    forest_factorial,
    forest_from_json,
    forest_symmetry_factor,
    forest_to_json,
    graft_forest_all,
    ladder,
    parse_forest,
    parse_tree,
    symmetry_factor,
    tree_factorial,
    tree_from_json,
    tree_to_json,
    trees_up_to,
)

from oracles import brute_automorphisms, brute_cuts, brute_increasing_labellings, euler_transform_counts
from strategies import forests, trees


def test_counts_match_euler_transform():
    expected = [1, 1, 2, 4, 9, 20, 48, 115, 286, 719]
    assert euler_transform_counts(10) == expected
    assert [len(enumerate_trees(n)) for n in range(1, 11)] == expected


def test_enumeration_is_canonical_and_distinct():
    for n in range(1, 8):
        ts = enumerate_trees(n)
        assert len(set(ts)) == len(ts)
        assert ts == sorted(ts)
        assert all(t.size == n and parse_tree(str(t)) == t for t in ts)


def test_enumerate_four():
    assert [str(t) for t in enumerate_trees(4)] == [
        "o[o,o,o]", "o[o,o[o]]", "o[o[o,o]]", "o[o[o[o]]]"
    ]


@pytest.mark.parametrize("n", range(1, 8))
def test_symmetry_factor_against_brute_force(n):
    for t in enumerate_trees(n):
        assert symmetry_factor(t) == brute_automorphisms(t), t


@pytest.mark.parametrize("n", range(1, 8))
def test_tree_factorial_counts_increasing_labellings(n):
    for t in enumerate_trees(n):
        assert brute_increasing_labellings(t) == math.factorial(n) // tree_factorial(t), t


@pytest.mark.parametrize("n", range(1, 7))
def test_cuts_against_edge_subsets(n):
    for t in enumerate_trees(n):
        mine = sorted(
            ((c.removed_part, c.root_part) for c in admissible_cuts(t)),
            key=lambda p: (p[0].key, p[1].key),
        )
        assert mine == brute_cuts(t), t


def test_cut_masks_are_distinct_and_sizes_add_up():
    for t in trees_up_to(6):
        cuts = admissible_cuts(t)
        assert len({c.edge_subset_id for c in cuts}) == len(cuts)
        for c in cuts:
            assert sum(x.size for x in c.removed_part) + c.root_part.size == t.size


def test_named_trees():
    assert str(ladder(3)) == "o[o[o]]"
    assert str(corolla(4)) == "o[o,o,o]"
    assert symmetry_factor(corolla(5)) == 24
    assert tree_factorial(ladder(5)) == 120
    assert tree_factorial(corolla(5)) == 5


def test_forest_invariants_multiply():
    f = parse_forest("o[o,o]*o[o,o]*o")
    assert forest_symmetry_factor(f) == 2 * 2 * 2  # two swaps inside, one between
    assert forest_factorial(f) == 3 * 3


@given(trees, st.randoms())
def test_children_order_is_irrelevant(t, rnd):
    def shuffle(node):
        kids = [shuffle(c) for c in node.children]
        rnd.shuffle(kids)
        return Tree(kids)

    assert shuffle(t) == t
    assert hash(shuffle(t)) == hash(t)


@given(trees)
def test_string_and_json_roundtrip(t):
    assert parse_tree(str(t)) == t
    assert tree_from_json(tree_to_json(t)) == t


@given(forests)
def test_forest_roundtrip(f):
    assert parse_forest(str(f)) == f
    assert forest_from_json(forest_to_json(f)) == f


@given(trees, trees)
def test_grafting_one_result_per_host_vertex(host, scion):
    out = graft_forest_all(host, Forest((scion,)))
    assert len(out) == host.size
    assert all(g.size == host.size + scion.size for g in out)


def test_whitespace_tolerated():
    assert parse_tree(" o [ o , o[o] ] ") == parse_tree("o[o,o[o]]")


@pytest.mark.parametrize("bad, pos", [("x", 0), ("o[", 2), ("o[o", 3), ("o[o]]", 4), ("o[]", 2)])
def test_syntax_errors_report_position(bad, pos):
    with pytest.raises(TreeSyntaxError) as e:
        parse_tree(bad)
    assert e.value.pos == pos


def test_forest_syntax_errors():
    with pytest.raises(TreeSyntaxError):
        parse_forest("")
    with pytest.raises(TreeSyntaxError):
        parse_forest("o*")


def test_bound_is_enforced():
    old = forest_core.nmax()
    try:
        forest_core.set_nmax(5)
        with pytest.raises(BoundExceededError):
            enumerate_trees(6)
        assert len(enumerate_trees(5)) == 9
    finally:
        forest_core.set_nmax(old)
    with pytest.raises(ValueError):
        enumerate_trees(0)


def test_trees_are_immutable():
    with pytest.raises(AttributeError):
        LEAF.size = 3
