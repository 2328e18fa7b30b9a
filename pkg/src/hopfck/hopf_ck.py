"""Rational linear combinations of forests and the Hopf structure on them.

Coefficients are ``fractions.Fraction`` everywhere; there is no floating point.
The coproduct and antipode are memoized per tree and extended multiplicatively.
"""
from __future__ import annotations

import json
import re
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

from .forest_core import (
    LEAF,
    Forest,
    Tree,
    admissible_cuts,
    forest_from_json,
    forest_to_json,
    graft_forest_all,
    parse_forest,
)

__all__ = [
    "Elem",
    "TensorElem",
    "SeriesElem",
    "ONE_FOREST",
    "product",
    "coproduct",
    "counit",
    "antipode",
    "bplus",
    "growth_N",
    "prelie_graft",
    "series_exp",
    "series_log",
    "series_mul",
    "tensor_product",
    "coefficient_string",
]

ONE_FOREST = Forest()


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def coefficient_string(c: Fraction) -> str:
    return str(c)


_NUMBER = re.compile(r"\d+(?:/\d+)?")
_COEFF_TERM = re.compile(r"^(\d+(?:/\d+)?)\s*\*\s*(.+)$", re.S)


def _signed_terms(s: str) -> list[tuple[int, str]]:
    # split on top-level + and -; consecutive signs multiply
    out, sign, buf, depth = [], 1, [], 0
    for ch in s:
        if ch in "+-" and depth == 0:
            term = "".join(buf).strip()
            if term:
                out.append((sign, term))
                sign = 1
            buf = []
            if ch == "-":
                sign = -sign
            continue
        depth += (ch == "[") - (ch == "]")
        buf.append(ch)
    term = "".join(buf).strip()
    if not term:
        raise ValueError(f"missing term at end of {s!r}")
    out.append((sign, term))
    return out


class Elem:
    """Finite combination ``sum c_F F`` over forests; zero coefficients are never stored."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Forest, object] | None = None):
        clean = {}
        if terms:
            for f, c in terms.items():
                c = _q(c)
                if c:
                    clean[f] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Elem is immutable")

    # constructors
    @classmethod
    def one(cls) -> "Elem":
        return cls({ONE_FOREST: 1})

    @classmethod
    def zero(cls) -> "Elem":
        return cls()

    @classmethod
    def tree(cls, t: Tree, coeff=1) -> "Elem":
        return cls({Forest((t,)): coeff})

    @classmethod
    def forest(cls, f: Forest, coeff=1) -> "Elem":
        return cls({f: coeff})

    @classmethod
    def from_trees(cls, trees: Iterable[Tree]) -> "Elem":
        acc: dict[Forest, Fraction] = defaultdict(Fraction)
        for t in trees:
            acc[Forest((t,))] += 1
        return cls(acc)

    @classmethod
    def _raw(cls, terms: dict) -> "Elem":
        # terms already clean
        e = object.__new__(cls)
        object.__setattr__(e, "terms", terms)
        return e

    # queries
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, f: Forest | Tree) -> Fraction:
        if isinstance(f, Tree):
            f = Forest((f,))
        return self.terms.get(f, Fraction(0))

    def degrees(self) -> set[int]:
        return {f.size for f in self.terms}

    def component(self, d: int) -> "Elem":
        return Elem._raw({f: c for f, c in self.terms.items() if f.size == d})

    def is_homogeneous(self, d: int) -> bool:
        return all(f.size == d for f in self.terms)

    def is_tree_combination(self) -> bool:
        return all(f.is_tree() for f in self.terms)

    def tree_terms(self) -> dict[Tree, Fraction]:
        return {f.trees[0]: c for f, c in self.terms.items() if f.is_tree()}

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0].key)

    # arithmetic
    def __add__(self, other: "Elem") -> "Elem":
        if not isinstance(other, Elem):
            return NotImplemented
        acc = dict(self.terms)
        for f, c in other.terms.items():
            v = acc.get(f, 0) + c
            if v:
                acc[f] = v
            else:
                acc.pop(f, None)
        return Elem._raw(acc)

    def __neg__(self) -> "Elem":
        return Elem._raw({f: -c for f, c in self.terms.items()})

    def __sub__(self, other: "Elem") -> "Elem":
        if not isinstance(other, Elem):
            return NotImplemented
        return self + (-other)

    def scale(self, k) -> "Elem":
        k = _q(k)
        if not k:
            return Elem()
        return Elem._raw({f: c * k for f, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Elem):
            return product(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> "Elem":
        out = Elem.one()
        for _ in range(k):
            out = product(out, self)
        return out

    def __eq__(self, other):
        return isinstance(other, Elem) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def map_forests(self, fn: Callable[[Forest], "Elem"]) -> "Elem":
        """Linear extension of a forest -> Elem map."""
        acc: dict[Forest, Fraction] = defaultdict(Fraction)
        for f, c in self.terms.items():
            for g, d in fn(f).terms.items():
                acc[g] += c * d
        return Elem(acc)

    # serialization
    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c} * {f}" for f, c in self.sorted_items())

    def __repr__(self):
        return f"Elem({str(self)!r})"

    @classmethod
    def parse(cls, s: str) -> "Elem":
        """Inverse of ``str``; also accepts ``2*o[o] - o*o`` style input."""
        acc: dict[Forest, Fraction] = defaultdict(Fraction)
        for sign, term in _signed_terms(s):
            m = _COEFF_TERM.match(term)
            if m:
                coeff, forest = Fraction(m.group(1)), m.group(2)
            elif _NUMBER.fullmatch(term):
                coeff, forest = Fraction(term), "1"
            else:
                coeff, forest = Fraction(1), term
            acc[parse_forest(forest)] += sign * coeff
        return cls(acc)

    def to_json(self):
        return [{"coeff": str(c), "forest": forest_to_json(f)} for f, c in self.sorted_items()]

    @classmethod
    def from_json(cls, obj) -> "Elem":
        acc: dict[Forest, Fraction] = defaultdict(Fraction)
        for item in obj:
            acc[forest_from_json(item["forest"])] += Fraction(item["coeff"])
        return cls(acc)


class TensorElem:
    """Finite combination over pairs of forests. No flip symmetry is assumed."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[Forest, Forest], object] | None = None):
        clean = {}
        if terms:
            for k, c in terms.items():
                c = _q(c)
                if c:
                    clean[k] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("TensorElem is immutable")

    @classmethod
    def pure(cls, a: Elem, b: Elem) -> "TensorElem":
        acc = {}
        for f, c in a.terms.items():
            for g, d in b.terms.items():
                acc[(f, g)] = c * d
        return cls(acc)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, TensorElem) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "TensorElem") -> "TensorElem":
        acc: dict = defaultdict(Fraction, self.terms)
        for k, c in other.terms.items():
            acc[k] += c
        return TensorElem(acc)

    def __neg__(self):
        return TensorElem({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "TensorElem") -> "TensorElem":
        return self + (-other)

    def scale(self, k) -> "TensorElem":
        k = _q(k)
        return TensorElem({key: c * k for key, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TensorElem):
            return tensor_product(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def coefficient(self, left: Forest | Tree, right: Forest | Tree) -> Fraction:
        if isinstance(left, Tree):
            left = Forest((left,))
        if isinstance(right, Tree):
            right = Forest((right,))
        return self.terms.get((left, right), Fraction(0))

    def bidegree(self, p: int, q: int) -> "TensorElem":
        return TensorElem(
            {k: c for k, c in self.terms.items() if k[0].size == p and k[1].size == q}
        )

    def bidegrees(self) -> set[tuple[int, int]]:
        return {(a.size, b.size) for a, b in self.terms}

    def map_left(self, fn: Callable[[Forest], Elem]) -> "TensorElem":
        acc: dict = defaultdict(Fraction)
        for (a, b), c in self.terms.items():
            for a2, d in fn(a).terms.items():
                acc[(a2, b)] += c * d
        return TensorElem(acc)

    def map_right(self, fn: Callable[[Forest], Elem]) -> "TensorElem":
        acc: dict = defaultdict(Fraction)
        for (a, b), c in self.terms.items():
            for b2, d in fn(b).terms.items():
                acc[(a, b2)] += c * d
        return TensorElem(acc)

    def multiply(self) -> Elem:
        """m: a (x) b -> ab."""
        acc: dict = defaultdict(Fraction)
        for (a, b), c in self.terms.items():
            acc[a * b] += c
        return Elem(acc)

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0].key, kv[0][1].key))

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c} * {a} (x) {b}" for (a, b), c in self.sorted_items())

    def __repr__(self):
        return f"TensorElem({str(self)!r})"

    def to_json(self):
        return [
            {"coeff": str(c), "left": forest_to_json(a), "right": forest_to_json(b)}
            for (a, b), c in self.sorted_items()
        ]

    @classmethod
    def from_json(cls, obj) -> "TensorElem":
        acc: dict = defaultdict(Fraction)
        for item in obj:
            key = (forest_from_json(item["left"]), forest_from_json(item["right"]))
            acc[key] += Fraction(item["coeff"])
        return cls(acc)


# ---------------------------------------------------------------- algebra


def product(a: Elem, b: Elem) -> Elem:
    acc: dict[Forest, Fraction] = defaultdict(Fraction)
    for f, c in a.terms.items():
        for g, d in b.terms.items():
            acc[f * g] += c * d
    return Elem(acc)


def tensor_product(x: TensorElem, y: TensorElem) -> TensorElem:
    acc: dict = defaultdict(Fraction)
    for (a, b), c in x.terms.items():
        for (a2, b2), d in y.terms.items():
            acc[(a * a2, b * b2)] += c * d
    return TensorElem(acc)


@lru_cache(maxsize=None)
def _tree_coproduct(t: Tree) -> tuple[tuple[Forest, Forest, int], ...]:
    acc: dict = defaultdict(int)
    tf = Forest((t,))
    acc[(tf, ONE_FOREST)] += 1
    acc[(ONE_FOREST, tf)] += 1
    for cut in admissible_cuts(t):
        acc[(cut.removed_part, Forest((cut.root_part,)))] += 1
    return tuple((a, b, c) for (a, b), c in acc.items())


@lru_cache(maxsize=100_000)
def _forest_coproduct(f: Forest) -> tuple[tuple[Forest, Forest, int], ...]:
    cur: dict = {(ONE_FOREST, ONE_FOREST): 1}
    for t in f.trees:
        nxt: dict = defaultdict(int)
        for (a, b), c in cur.items():
            for a2, b2, d in _tree_coproduct(t):
                nxt[(a * a2, b * b2)] += c * d
        cur = nxt
    return tuple((a, b, c) for (a, b), c in cur.items())


def coproduct(x: Elem | Tree | Forest) -> TensorElem:
    """Cut coproduct, extended as an algebra morphism."""
    x = _as_elem(x)
    acc: dict = defaultdict(Fraction)
    for f, c in x.terms.items():
        for a, b, d in _forest_coproduct(f):
            acc[(a, b)] += c * d
    return TensorElem(acc)


def counit(x: Elem) -> Fraction:
    return _as_elem(x).coefficient(ONE_FOREST)


@lru_cache(maxsize=None)
def _tree_antipode(t: Tree) -> Elem:
    out = -Elem.tree(t)
    for cut in admissible_cuts(t):
        out = out - product(_forest_antipode(cut.removed_part), Elem.tree(cut.root_part))
    return out


@lru_cache(maxsize=100_000)
def _forest_antipode(f: Forest) -> Elem:
    out = Elem.one()
    for t in f.trees:
        out = product(out, _tree_antipode(t))
    return out


def antipode(x: Elem) -> Elem:
    """Recursive cut formula on trees; multiplicative (the product is commutative)."""
    return _as_elem(x).map_forests(_forest_antipode)


def bplus(x: Elem) -> Elem:
    acc: dict[Forest, Fraction] = defaultdict(Fraction)
    for f, c in _as_elem(x).terms.items():
        acc[Forest((Tree(f.trees),))] += c
    return Elem(acc)


def _graft_on_forest(f: Forest, scion: Forest) -> Elem:
    acc: dict[Forest, Fraction] = defaultdict(Fraction)
    trees = f.trees
    for i, t in enumerate(trees):
        rest = trees[:i] + trees[i + 1:]
        for g in graft_forest_all(t, scion):
            acc[Forest(rest + (g,))] += 1
    return Elem(acc)


_LEAF_FOREST = Forest((LEAF,))


def growth_N(x: Elem) -> Elem:
    """Sum over all vertices of attaching a new leaf there."""
    return _as_elem(x).map_forests(lambda f: _graft_on_forest(f, _LEAF_FOREST))


def prelie_graft(x: Elem, y: Elem) -> Elem:
    """x . y: graft y's forest onto every vertex of x's forest, bilinearly."""
    x, y = _as_elem(x), _as_elem(y)
    acc: dict[Forest, Fraction] = defaultdict(Fraction)
    for f, c in x.terms.items():
        for g, d in y.terms.items():
            for h, e in _graft_on_forest(f, g).terms.items():
                acc[h] += c * d * e
    return Elem(acc)


def _as_elem(x) -> Elem:
    if isinstance(x, Elem):
        return x
    if isinstance(x, Tree):
        return Elem.tree(x)
    if isinstance(x, Forest):
        return Elem.forest(x)
    raise TypeError(f"cannot treat {type(x).__name__} as an Elem")


# ---------------------------------------------------------------- graded series


class SeriesElem:
    """Degree-truncated series; ``comps[d]`` is homogeneous of vertex degree d."""

    __slots__ = ("comps", "N")

    def __init__(self, comps: Iterable[Elem], N: int | None = None):
        cs = list(comps)
        if N is None:
            N = len(cs) - 1
        cs = (cs + [Elem()] * (N + 1))[: N + 1]
        for d, c in enumerate(cs):
            if not c.is_homogeneous(d):
                raise ValueError(f"component {d} is not homogeneous of degree {d}")
        object.__setattr__(self, "comps", tuple(cs))
        object.__setattr__(self, "N", N)

    def __setattr__(self, name, value):
        raise AttributeError("SeriesElem is immutable")

    @classmethod
    def from_elem(cls, x: Elem, N: int) -> "SeriesElem":
        return cls([x.component(d) for d in range(N + 1)], N)

    def __getitem__(self, d: int) -> Elem:
        return self.comps[d]

    def __eq__(self, other):
        return isinstance(other, SeriesElem) and self.N == other.N and self.comps == other.comps

    def __add__(self, other: "SeriesElem") -> "SeriesElem":
        n = min(self.N, other.N)
        return SeriesElem([self.comps[d] + other.comps[d] for d in range(n + 1)], n)

    def __sub__(self, other: "SeriesElem") -> "SeriesElem":
        return self + other.scale(-1)

    def scale(self, k) -> "SeriesElem":
        return SeriesElem([c.scale(k) for c in self.comps], self.N)

    def total(self) -> Elem:
        out = Elem()
        for c in self.comps:
            out = out + c
        return out

    def to_json(self):
        return {"N": self.N, "comps": [c.to_json() for c in self.comps]}

    @classmethod
    def from_json(cls, obj) -> "SeriesElem":
        return cls([Elem.from_json(c) for c in obj["comps"]], obj["N"])


def series_mul(a: SeriesElem, b: SeriesElem) -> SeriesElem:
    n = min(a.N, b.N)
    comps = []
    for d in range(n + 1):
        acc = Elem()
        for k in range(d + 1):
            if a.comps[k] and b.comps[d - k]:
                acc = acc + product(a.comps[k], b.comps[d - k])
        comps.append(acc)
    return SeriesElem(comps, n)


def _unit_series(N: int) -> SeriesElem:
    return SeriesElem([Elem.one()], N)


def series_exp(x: SeriesElem) -> SeriesElem:
    if x.comps[0]:
        raise ValueError("series_exp needs a zero degree-0 component")
    out = _unit_series(x.N)
    power = _unit_series(x.N)
    for k in range(1, x.N + 1):
        power = series_mul(power, x).scale(Fraction(1, k))
        out = out + power
    return out


def series_log(x: SeriesElem) -> SeriesElem:
    if x.comps[0] != Elem.one():
        raise ValueError("series_log needs degree-0 component equal to the unit")
    y = x - _unit_series(x.N)
    out = SeriesElem([], x.N)
    power = _unit_series(x.N)
    for k in range(1, x.N + 1):
        power = series_mul(power, y)
        out = out + power.scale(Fraction((-1) ** (k + 1), k))
    return out


def elem_json_dumps(x: Elem) -> str:
    return json.dumps(x.to_json(), sort_keys=True)
