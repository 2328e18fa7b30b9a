import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hopfck.classify import (
    KINDS,
    FamilyError,
    FamilySpec,
    cycle_index,
    family_array,
    match_family,
    random_spec,
    search_second_order_extensions,
    seq01_an,
    seq01_an_piecewise,
    seq01_an_via_cycle_index,
    seq01_classify,
    seq01_classify_array,
    seq01_corolla_coeff,
)
from hopfck.lambda_arrays import (
    LambdaArray,
    check_prelie,
    extract_lambda,
    nondegeneracy_failures,
    reconstruct_seq,
    strong_order,
)
from hopfck.sequences import family_cm, family_corollas, family_dse_ab, family_ladders_with_leaves, family_zn

import published_values as pf

FIRST_ORDER = ["CaseA", "CaseB", "CaseC", "CaseD", "CaseE"]


def same_array(x: FamilySpec, y: FamilySpec, N=8) -> bool:
    return family_array(x, N) == family_array(y, N)


@pytest.mark.parametrize("kind", FIRST_ORDER)
@pytest.mark.parametrize("seed", range(4))
def test_first_order_cases(kind, seed):
    spec = random_spec(kind, random.Random(seed), 8)
    a = family_array(spec, 8)
    assert check_prelie(a) == []
    rep = strong_order(a)
    assert rep.strong_order == 1 and rep.leftmost_exact
    m = match_family(a)
    assert m and same_array(m.matched, spec)


@settings(max_examples=12)
@given(st.sampled_from(FIRST_ORDER), st.integers(0, 10**6))
def test_match_recovers_parameters(kind, seed):
    spec = random_spec(kind, random.Random(seed), 8)
    m = match_family(family_array(spec, 8))
    assert m.matched is not None
    assert same_array(m.matched, spec)
    # distinct kinds only collide on measure-zero parameter sets
    if m.matched.kind == kind:
        assert m.matched == spec


def test_known_coincidences():
    # CaseD with a1 = 2 a2 is a CaseA array
    d = FamilySpec.make("CaseD", a1=2, a2=1)
    assert match_family(family_array(d, 8)).matched.kind == "CaseA"
    # the k = 0 corollas are CaseA(1, 0, 0)... as arrays
    c0 = extract_lambda(family_corollas(0, 8))
    assert match_family(c0).matched == FamilySpec.make("CaseA", a1=1, a2=0, b=0)


@pytest.mark.parametrize("n, b", [(1, 1), (2, Fraction(-1, 3)), (3, 2), (4, 5)])
def test_zeroth_order_family(n, b):
    spec = FamilySpec.make("Z", n=n, b=b)
    a = family_array(spec, 8)
    assert check_prelie(a) == []
    assert strong_order(a).strong_order == 0
    assert match_family(a).matched == spec


def test_z_one_folds_b_into_scale():
    assert FamilySpec.make("Z", n=1, b=2) == FamilySpec.make("Z", n=1, b=1, scale=2)


def test_zn_sequences_match_their_family():
    assert match_family(extract_lambda(family_zn(3, 2, 8))).matched == FamilySpec.make("Z", n=3, b=2)


def test_case_a_diagonal_is_dse_family():
    a, b = Fraction(2), Fraction(3)
    assert family_array(FamilySpec.make("CaseA", a1=a, a2=a, b=b), 8) == extract_lambda(family_dse_ab(a, b, 8))


def test_ladders_with_leaves_are_case_a():
    m = match_family(extract_lambda(family_ladders_with_leaves(2, 3, 8)))
    assert m.matched == FamilySpec.make("CaseA", a1=2, a2=0, b=3)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_scaled_corollas_match(k):
    a = extract_lambda(family_corollas(k, 8))
    assert match_family(a).matched == FamilySpec.make("ScaledCorolla", k=k)
    assert a == family_array(FamilySpec.make("ScaledCorolla", k=k), 8)


def test_corolla_diagonal():
    spec = FamilySpec.make("CorollaDiagonal", coeffs=[1, 0, 2])
    a = family_array(spec, 8)
    assert check_prelie(a) == []
    assert match_family(a).matched == spec


def test_cm_matches_nothing():
    m = match_family(extract_lambda(family_cm(8)))
    assert not m and m.failure_witness is not None
    assert m.to_json()["matched"] is None


@pytest.mark.parametrize("kind", ["Seq01A", "Seq01B", "Seq01C"])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_seq01_variants_are_prelie(kind, m):
    a = family_array(FamilySpec.make(kind, m=m), 9)
    assert check_prelie(a) == []
    assert not nondegeneracy_failures(a)


def test_seq01_published_triangles():
    cases = {
        "Seq01AllOnes": pf.SEQ01_ALL_ONES,
        "Seq01A": pf.SEQ01_A3,
        "Seq01B": pf.SEQ01_B3,
        "Seq01C": pf.SEQ01_C3,
    }
    for kind, rows in cases.items():
        a = LambdaArray.from_json([[str(x) for x in r] for r in rows])
        found = seq01_classify_array(a)
        expected = FamilySpec.make(kind) if kind == "Seq01AllOnes" else FamilySpec.make(kind, m=3)
        assert found == [expected], kind
        assert a == family_array(expected, 9)


def test_seq01_classify_short_windows_are_ambiguous():
    assert set(map(str, seq01_classify([1, 1, 0]))) == {"Seq01A(m=3)", "Seq01B(m=3)", "Seq01C(m=3)"}
    assert seq01_classify([1, 0, 1, 1]) == [FamilySpec.make("Seq01C", m=2)]
    assert seq01_classify([0, 1]) == []
    assert seq01_classify([1, 2]) == []


@pytest.mark.parametrize("m", [2, 3, 4])
def test_three_an_routes_agree(m):
    for n in range(0, 9):
        v = seq01_an(m, n)
        assert v == seq01_an_via_cycle_index(m, n) == seq01_an_piecewise(m, n), (m, n)


def test_an_small_values():
    # m = 3: (1 + X)(1 + X^3)^(-1/3) = 1 + X - X^3/3 - X^4/3 + ...
    assert [seq01_an(3, n) for n in range(6)] == [1, 1, 0, Fraction(-1, 3), Fraction(-1, 3), 0]


@pytest.mark.parametrize("kind", ["Seq01B", "Seq01C"])
@pytest.mark.parametrize("m", [2, 3])
def test_corolla_coefficients_follow_series(kind, m):
    s = reconstruct_seq(family_array(FamilySpec.make(kind, m=m), 7))
    assert [seq01_corolla_coeff(s, n) for n in range(1, 7)] == [seq01_an(m, n) for n in range(1, 7)]


def test_cycle_index_counts_permutations():
    # all X_i -> 1 gives 1 for every n
    assert all(cycle_index(n, lambda i: Fraction(1)) == 1 for n in range(7))
    # X_1 -> 1, others 0: 1/n!
    assert cycle_index(4, lambda i: Fraction(1 if i == 1 else 0)) == Fraction(1, 24)


def test_spec_validation_and_json():
    for bad in [
        lambda: FamilySpec.make("Nope"),
        lambda: FamilySpec.make("CaseA", a1=0, a2=1, b=1),
        lambda: FamilySpec.make("CaseA", a1=1, a2=1),
        lambda: FamilySpec.make("Z", n=2, b=0),
        lambda: FamilySpec.make("Z", n=Fraction(1, 2), b=1),
        lambda: FamilySpec.make("Seq01B", m=1),
        lambda: FamilySpec.make("CaseB", a1=1, a2=1, b=2),
    ]:
        with pytest.raises(FamilyError):
            bad()
    for kind in KINDS:
        try:
            spec = random_spec(kind, random.Random(1))
        except FamilyError:
            continue
        assert FamilySpec.from_json(spec.to_json()) == spec


def test_second_order_search_finds_only_corollas():
    r = search_second_order_extensions(2, 3, 7)
    assert r.only_corolla_type
    assert r.to_json()["only_corolla_type"] is True
    with pytest.raises(FamilyError):
        search_second_order_extensions(1, -1, 7)
