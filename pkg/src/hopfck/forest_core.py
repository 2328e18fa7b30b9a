"""Canonical unordered rooted trees and forests.

A tree is stored with its children sorted by ``(size, canonical string)``,
so isomorphic trees have identical representations and compare equal.
Everything here is immutable; memo tables use ``functools.lru_cache``,
which is safe to call from several threads.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

__all__ = [
    "Tree",
    "Forest",
    "Cut",
    "TreeSyntaxError",
    "BoundExceededError",
    "nmax",
    "set_nmax",
    "parse_tree",
    "parse_forest",
    "enumerate_trees",
    "symmetry_factor",
    "tree_factorial",
    "admissible_cuts",
    "graft_all",
    "graft_forest_all",
    "ladder",
    "corolla",
    "leaf",
    "LEAF",
    "trees_up_to",
    "forest_symmetry_factor",
    "forest_factorial",
    "tree_to_json",
    "tree_from_json",
    "forest_to_json",
    "forest_from_json",
]

_DEFAULT_NMAX = 10
_nmax = int(os.environ.get("HOPFCK_NMAX", _DEFAULT_NMAX))


class TreeSyntaxError(ValueError):
    """Malformed tree string; ``pos`` is the offending character index."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.text = text
        self.pos = pos


class BoundExceededError(ValueError):
    """A requested size exceeds the configured truncation bound."""


def nmax() -> int:
    return _nmax


def set_nmax(n: int) -> None:
    """Change the enumeration bound. Memo tables are keyed by n, so no flush is needed."""
    global _nmax
    if n < 1:
        raise ValueError("bound must be positive")
    _nmax = n


def _sort_key(t: "Tree"):
    return (t.size, t._s)


class Tree:
    """Canonical rooted tree. Build with ``Tree(children)``; children may be in any order."""

    __slots__ = ("children", "size", "_s", "_h")

    def __init__(self, children: Iterable["Tree"] = ()):
        kids = tuple(sorted(children, key=_sort_key))
        s = "o" if not kids else "o[" + ",".join(c._s for c in kids) + "]"
        object.__setattr__(self, "children", kids)
        object.__setattr__(self, "size", 1 + sum(c.size for c in kids))
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_h", hash(s))

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    @property
    def key(self):
        return (self.size, self._s)

    def __eq__(self, other):
        return isinstance(other, Tree) and self._s == other._s

    def __hash__(self):
        return self._h

    def __lt__(self, other: "Tree"):
        return _sort_key(self) < _sort_key(other)

    def __le__(self, other: "Tree"):
        return _sort_key(self) <= _sort_key(other)

    def __str__(self):
        return self._s

    def __repr__(self):
        return f"Tree({self._s!r})"

    def __reduce__(self):
        return (parse_tree, (self._s,))

    def vertices(self) -> Iterator["Tree"]:
        """Subtrees rooted at each vertex, preorder."""
        yield self
        for c in self.children:
            yield from c.vertices()

    def num_leaves(self) -> int:
        if not self.children:
            return 1
        return sum(c.num_leaves() for c in self.children)

    def depth(self) -> int:
        """Edges on the longest root-to-leaf path."""
        if not self.children:
            return 0
        return 1 + max(c.depth() for c in self.children)


class Forest:
    """Multiset of trees, canonically sorted. The empty forest is the unit."""

    __slots__ = ("trees", "size", "_s", "_h")

    def __init__(self, trees: Iterable[Tree] = ()):
        ts = tuple(sorted(trees, key=_sort_key))
        s = "*".join(t._s for t in ts) if ts else "1"
        object.__setattr__(self, "trees", ts)
        object.__setattr__(self, "size", sum(t.size for t in ts))
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_h", hash(("F", s)))

    def __setattr__(self, name, value):
        raise AttributeError("Forest is immutable")

    @property
    def key(self):
        return (self.size, len(self.trees), self._s)

    def __eq__(self, other):
        return isinstance(other, Forest) and self._s == other._s

    def __hash__(self):
        return self._h

    def __lt__(self, other: "Forest"):
        return self.key < other.key

    def __len__(self):
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    def __mul__(self, other: "Forest") -> "Forest":
        return Forest(self.trees + other.trees)

    def __str__(self):
        return self._s

    def __repr__(self):
        return f"Forest({self._s!r})"

    def __reduce__(self):
        return (parse_forest, (self._s,))

    def is_tree(self) -> bool:
        return len(self.trees) == 1


@dataclass(frozen=True)
class Cut:
    """Admissible cut: ``removed_part`` is the pruned forest, ``root_part`` the trunk.

    ``edge_subset_id`` is a bitmask over edges; edge k joins preorder vertex k to its parent.
    """

    removed_part: Forest
    root_part: Tree
    edge_subset_id: int


# ---------------------------------------------------------------- parsing


def parse_tree(s: str) -> Tree:
    """Parse ``T := "o" | "o[" T ("," T)* "]"``; whitespace is ignored."""
    tree, pos = _parse_at(s, _skip(s, 0))
    pos = _skip(s, pos)
    if pos != len(s):
        raise TreeSyntaxError("trailing input", s, pos)
    return tree


def _skip(s: str, pos: int) -> int:
    while pos < len(s) and s[pos].isspace():
        pos += 1
    return pos


def _parse_at(s: str, pos: int):
    if pos >= len(s) or s[pos] != "o":
        raise TreeSyntaxError("expected 'o'", s, pos)
    pos = _skip(s, pos + 1)
    if pos >= len(s) or s[pos] != "[":
        return LEAF, pos
    kids = []
    pos = _skip(s, pos + 1)
    while True:
        child, pos = _parse_at(s, pos)
        kids.append(child)
        pos = _skip(s, pos)
        if pos < len(s) and s[pos] == ",":
            pos = _skip(s, pos + 1)
            continue
        if pos < len(s) and s[pos] == "]":
            return Tree(kids), pos + 1
        raise TreeSyntaxError("expected ',' or ']'", s, pos)


def parse_forest(s: str) -> Forest:
    """Parse trees joined by ``*``; ``"1"`` is the empty forest."""
    body = s.strip()
    if body == "1":
        return Forest()
    if not body:
        raise TreeSyntaxError("empty forest string", s, 0)
    trees = []
    offset = 0
    for part in s.split("*"):
        try:
            trees.append(parse_tree(part))
        except TreeSyntaxError as e:
            raise TreeSyntaxError("bad tree in forest", s, offset + e.pos) from None
        offset += len(part) + 1
    return Forest(trees)


def tree_to_json(t: Tree):
    return [tree_to_json(c) for c in t.children]


def tree_from_json(obj) -> Tree:
    if not isinstance(obj, list):
        raise ValueError(f"tree JSON must be a list, got {type(obj).__name__}")
    return Tree(tree_from_json(c) for c in obj)


def forest_to_json(f: Forest):
    return [tree_to_json(t) for t in f.trees]


def forest_from_json(obj) -> Forest:
    if not isinstance(obj, list):
        raise ValueError("forest JSON must be a list of trees")
    return Forest(tree_from_json(t) for t in obj)


# ---------------------------------------------------------------- named trees

LEAF = Tree()


def leaf() -> Tree:
    return LEAF


@lru_cache(maxsize=None)
def ladder(n: int) -> Tree:
    if n < 1:
        raise ValueError("ladder size must be positive")
    return LEAF if n == 1 else Tree([ladder(n - 1)])


@lru_cache(maxsize=None)
def corolla(n: int) -> Tree:
    if n < 1:
        raise ValueError("corolla size must be positive")
    return Tree([LEAF] * (n - 1))


# ---------------------------------------------------------------- enumeration


def _check_bound(n: int) -> None:
    if n < 1:
        raise ValueError(f"tree size must be positive, got {n}")
    if n > _nmax:
        raise BoundExceededError(f"size {n} exceeds truncation bound {_nmax}")


def enumerate_trees(n: int) -> list[Tree]:
    """All canonical trees with n vertices, once each, in canonical order."""
    _check_bound(n)
    return list(_trees_of_size(n))


@lru_cache(maxsize=None)
def _trees_of_size(n: int) -> tuple[Tree, ...]:
    if n == 1:
        return (LEAF,)
    out = [Tree(f) for f in _forests_of_size(n - 1, 0)]
    return tuple(sorted(out, key=_sort_key))


@lru_cache(maxsize=None)
def _catalogue(m: int) -> tuple[Tree, ...]:
    # every tree of size <= m, in canonical order; indices give the multiset order
    return tuple(t for k in range(1, m + 1) for t in _trees_of_size(k))


@lru_cache(maxsize=None)
def _forests_of_size(m: int, start: int) -> tuple[tuple[Tree, ...], ...]:
    # multisets of total size m using catalogue entries with index >= start
    if m == 0:
        return ((),)
    cat = _catalogue(m)
    out = []
    for idx in range(start, len(cat)):
        t = cat[idx]
        if t.size > m:
            break
        for rest in _forests_of_size(m - t.size, idx):
            out.append((t,) + rest)
    return tuple(out)


# ---------------------------------------------------------------- statistics


@lru_cache(maxsize=None)
def symmetry_factor(t: Tree) -> int:
    """Order of the automorphism group of t."""
    out = 1
    for child, group in itertools.groupby(t.children):
        k = len(list(group))
        out *= math.factorial(k) * symmetry_factor(child) ** k
    return out


@lru_cache(maxsize=None)
def tree_factorial(t: Tree) -> int:
    out = t.size
    for c in t.children:
        out *= tree_factorial(c)
    return out


def forest_symmetry_factor(f: Forest) -> int:
    out = 1
    for t, group in itertools.groupby(f.trees):
        k = len(list(group))
        out *= math.factorial(k) * symmetry_factor(t) ** k
    return out


def forest_factorial(f: Forest) -> int:
    out = 1
    for t in f.trees:
        out *= tree_factorial(t)
    return out


# ---------------------------------------------------------------- cuts


@lru_cache(maxsize=None)
def _cuts_with_empty(t: Tree) -> tuple[tuple[tuple[Tree, ...], Tree, int], ...]:
    # (pruned trees, trunk, mask) with vertex 0 = root; includes the empty cut
    per_child = []
    offset = 1
    for c in t.children:
        options = [((c,), None, 1 << offset)]
        for pruned, trunk, mask in _cuts_with_empty(c):
            options.append((pruned, trunk, mask << offset))
        per_child.append(options)
        offset += c.size
    out = []
    for combo in itertools.product(*per_child):
        pruned: tuple[Tree, ...] = ()
        kept = []
        mask = 0
        for p, trunk, m in combo:
            pruned += p
            mask |= m
            if trunk is not None:
                kept.append(trunk)
        out.append((pruned, Tree(kept) if combo else t, mask))
    return tuple(out)


def admissible_cuts(t: Tree) -> list[Cut]:
    """Nonempty edge sets with no two edges on one root-to-leaf path."""
    return [
        Cut(Forest(pruned), trunk, mask)
        for pruned, trunk, mask in _cuts_with_empty(t)
        if mask
    ]


# ---------------------------------------------------------------- grafting


@lru_cache(maxsize=None)
def graft_forest_all(host: Tree, scion: Forest) -> tuple[Tree, ...]:
    """One tree per vertex of host: the scion's trees attached as new children there."""
    out = [Tree(host.children + scion.trees)]
    kids = host.children
    for i, c in enumerate(kids):
        for g in graft_forest_all(c, scion):
            out.append(Tree(kids[:i] + (g,) + kids[i + 1:]))
    return tuple(out)


def graft_all(host: Tree, scion: Tree):
    """Sum over vertices of host of grafting scion there, as an Elem."""
    from .hopf_ck import Elem

    return Elem.from_trees(graft_forest_all(host, Forest((scion,))))


def trees_up_to(n: int) -> Sequence[Tree]:
    _check_bound(n)
    return _catalogue(n)
