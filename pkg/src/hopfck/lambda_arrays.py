"""Structure-constant arrays and the two directions of the sequence/array bijection.

Index convention, used by every module: ``lam(i, j)`` is the coefficient of
``t_j (x) t_i`` in the coproduct of ``t_{i+j}``. So j is the size of the
pruned branch and i the size of the trunk; the column at fixed j, read as a
function of i, is a leftward diagonal of the triangle.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .forest_core import Forest, Tree, enumerate_trees, symmetry_factor
from .hopf_ck import Elem, coproduct
from .sequences import Seq, SeqError

__all__ = [
    "LambdaArray",
    "LambdaError",
    "DiagonalOrder",
    "OrderReport",
    "extract_lambda",
    "check_prelie",
    "nondegeneracy_failures",
    "lambda_multi",
    "mu",
    "reconstruct_seq",
    "diagonal_order",
    "strong_order",
    "extend_homogeneous",
    "homogeneity_check",
    "forward_differences",
]


class LambdaError(ValueError):
    pass


class LambdaArray:
    """lam(i, j) for lo <= i, j and i + j <= N (lo is 1, or 0 once extended)."""

    def __init__(self, vals: dict[tuple[int, int], object], N: int, lo: int = 1):
        self.N = N
        self.lo = lo
        self.vals: dict[tuple[int, int], Fraction] = {}
        for i in range(lo, N + 1):
            for j in range(lo, N - i + 1):
                if (i, j) not in vals:
                    raise LambdaError(f"missing entry ({i},{j}) on window N={N}")
                self.vals[(i, j)] = Fraction(vals[(i, j)])
        self._multi: dict[tuple[int, ...], Fraction] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_function(cls, fn: Callable[[int, int], object], N: int, lo: int = 1):
        return cls(
            {(i, j): fn(i, j) for i in range(lo, N + 1) for j in range(lo, N - i + 1)}, N, lo
        )

    def __call__(self, i: int, j: int) -> Fraction:
        try:
            return self.vals[(i, j)]
        except KeyError:
            raise LambdaError(f"entry ({i},{j}) outside window N={self.N}") from None

    def __eq__(self, other):
        return (
            isinstance(other, LambdaArray)
            and self.N == other.N
            and self.lo == other.lo
            and self.vals == other.vals
        )

    def restrict(self, N: int) -> "LambdaArray":
        if N > self.N:
            raise LambdaError("cannot enlarge a window by restriction")
        return LambdaArray(self.vals, N, self.lo)

    def column(self, j: int) -> list[Fraction]:
        """(lam(i, j)) for i = lo .. N - j."""
        return [self.vals[(i, j)] for i in range(self.lo, self.N - j + 1)]

    def rows(self) -> list[list[Fraction]]:
        """Row n lists lam(n-k, k) for k = lo .. n - lo; leftmost entry has the largest i."""
        out = []
        for n in range(2 * self.lo, self.N + 1):
            out.append([self.vals[(n - j, j)] for j in range(self.lo, n - self.lo + 1)])
        return out

    def to_json(self):
        return [[str(v) for v in row] for row in self.rows()]

    @classmethod
    def from_json(cls, rows, lo: int = 1) -> "LambdaArray":
        vals = {}
        for r, row in enumerate(rows):
            n = r + 2 * lo
            if len(row) != n - 2 * lo + 1:
                raise LambdaError(f"row {r} has wrong length")
            for k, v in enumerate(row):
                j = lo + k
                vals[(n - j, j)] = Fraction(v)
        return cls(vals, len(rows) + 2 * lo - 1, lo)

    def to_text(self) -> str:
        rows = [[str(v) for v in row] for row in self.rows()]
        width = max((len(x) for row in rows for x in row), default=1)
        depth = len(rows)
        lines = []
        for r, row in enumerate(rows):
            pad = " " * ((depth - r - 1) * (width + 1) // 2)
            lines.append(pad + " ".join(x.center(width) for x in row))
        return "\n".join(lines)


# ---------------------------------------------------------------- extraction


def _witness(t: Elem) -> tuple[Tree, Fraction]:
    tree, coeff = min(t.tree_terms().items(), key=lambda kv: kv[0].key)
    return tree, coeff


def extract_lambda(s: Seq) -> LambdaArray:
    """Read lam(i, j) off the tree (x) tree part of each coproduct."""
    N = s.N
    vals: dict[tuple[int, int], Fraction] = {}
    for n in range(2, N + 1):
        delta = coproduct(s.t(n))
        blocks: dict[tuple[int, int], dict] = {}
        for (f, g), c in delta.terms.items():
            if f.is_tree() and g.is_tree():
                blocks.setdefault((f.size, g.size), {})[(f.trees[0], g.trees[0])] = c
        for j in range(1, n):
            i = n - j
            block = blocks.get((j, i), {})
            tj, ti = s.t(j).tree_terms(), s.t(i).tree_terms()
            u, cu = _witness(s.t(j))
            v, cv = _witness(s.t(i))
            lam = block.get((u, v), Fraction(0)) / (cu * cv)
            expected = {(a, b): lam * x * y for a, x in tj.items() for b, y in ti.items()}
            expected = {k: c for k, c in expected.items() if c}
            if expected != block:
                bad = next(
                    k for k in sorted(set(expected) | set(block), key=lambda p: (p[0].key, p[1].key))
                    if expected.get(k, 0) != block.get(k, 0)
                )
                raise LambdaError(
                    f"block ({j},{i}) of Delta(t_{n}) is not proportional to t_{j} (x) t_{i}; "
                    f"first mismatch at {bad[0]} (x) {bad[1]}"
                )
            vals[(i, j)] = lam
    return LambdaArray(vals, N)


# ---------------------------------------------------------------- relations


def prelie_defect(a: LambdaArray, i: int, j: int, k: int) -> Fraction:
    lhs = a(i, j) * a(i + j, k) - a(j, k) * a(i, j + k)
    rhs = a(i, k) * a(i + k, j) - a(k, j) * a(i, j + k)
    return lhs - rhs


def check_prelie(a: LambdaArray) -> list[tuple[int, int, int]]:
    """Triples (i, j, k) with i + j + k <= N where the pre-Lie relation fails."""
    if a.lo != 1:
        raise LambdaError("the pre-Lie relation is stated for indices >= 1")
    bad = []
    for i in range(1, a.N + 1):
        for j in range(1, a.N + 1 - i):
            for k in range(1, a.N + 1 - i - j):
                if prelie_defect(a, i, j, k):
                    bad.append((i, j, k))
    return bad


def nondegeneracy_failures(a: LambdaArray) -> list[int]:
    """Row sums n in 2..N where every lam(i, j) with i + j = n vanishes."""
    return [
        n for n in range(2, a.N + 1)
        if all(a(n - j, j) == 0 for j in range(1, n))
    ]


# ---------------------------------------------------------------- inverse map


def lambda_multi(a: LambdaArray, idx: Iterable[int]) -> Fraction:
    """Multi-index coefficient; memoized on the sorted arguments."""
    key = tuple(sorted(idx))
    if any(i < 1 for i in key):
        raise LambdaError("multi-index entries must be positive")
    if 1 + sum(key) > a.N:
        raise LambdaError(f"multi-index {key} exceeds window N={a.N}")
    return _multi(a, key)


def _multi(a: LambdaArray, key: tuple[int, ...]) -> Fraction:
    hit = a._multi.get(key)
    if hit is not None:
        return hit
    k = len(key)
    if k == 0:
        val = Fraction(1)
    elif k == 1:
        val = a(1, key[0])
    else:
        head, last = key[:-1], key[-1]
        val = _multi(a, head) * a(1 + sum(head), last)
        for p in range(len(head)):
            merged = tuple(sorted(head[:p] + (head[p] + last,) + head[p + 1:]))
            val -= _multi(a, merged) * a(head[p], last)
    with a._lock:
        a._multi[key] = val
    return val


def mu(a: LambdaArray, t: Tree) -> Fraction:
    """Product over vertices of the multi-index coefficient of the child-subtree sizes."""
    if t.size > a.N:
        raise LambdaError(f"tree of size {t.size} exceeds window N={a.N}")
    out = Fraction(1)
    for v in t.vertices():
        if v.children:
            out *= _multi(a, tuple(sorted(c.size for c in v.children)))
            if not out:
                break
    return out


def reconstruct_seq(a: LambdaArray, N: int | None = None) -> Seq:
    """t_n = sum over trees of size n of mu(t) / s_t * t."""
    N = a.N if N is None else N
    if N > a.N:
        raise LambdaError(f"cannot reconstruct degree {N} from window N={a.N}")
    bad = check_prelie(a.restrict(N) if N < a.N else a)
    if bad:
        raise LambdaError(f"array violates the pre-Lie relation at {bad[0]}")
    if nondegeneracy_failures(a.restrict(N) if N < a.N else a):
        raise LambdaError("array is degenerate on the window")
    gens = []
    for n in range(1, N + 1):
        acc = {}
        for t in enumerate_trees(n):
            m = mu(a, t)
            if m:
                acc[Forest((t,))] = m / symmetry_factor(t)
        e = Elem(acc)
        if e.is_zero():
            raise SeqError(f"reconstructed t_{n} vanishes")
        gens.append(e)
    return Seq(tuple(gens), "reconstructed")


# ---------------------------------------------------------------- order analysis


def forward_differences(xs: list[Fraction]) -> list[list[Fraction]]:
    """Table whose row k holds the k-th forward differences."""
    table = [list(xs)]
    while len(table[-1]) > 1:
        prev = table[-1]
        table.append([b - c for c, b in zip(prev, prev[1:])])
    return table


@dataclass(frozen=True)
class DiagonalOrder:
    """Order evidence for one column, relative to its samples.

    ``lower_bound`` is the largest k whose k-th differences are not all zero,
    so the column certainly has order >= lower_bound. The verdict "order =
    lower_bound" is only given (``determined``) with at least lower_bound + 3
    samples, i.e. two vanishing higher differences.
    """

    j: int
    samples: int
    lower_bound: int
    zero: bool

    @property
    def determined(self) -> bool:
        return self.samples >= 3 and self.samples >= self.lower_bound + 3

    @property
    def order(self) -> int | None:
        return self.lower_bound if self.determined else None

    def to_json(self):
        return {
            "j": self.j,
            "samples": self.samples,
            "order": self.order,
            "lower_bound": self.lower_bound,
            "zero": self.zero,
            "determined": self.determined,
        }


@dataclass(frozen=True)
class OrderReport:
    per_diagonal: dict[int, DiagonalOrder]
    strong_order: int | None
    leftmost_exact: bool
    window_sizes: dict[int, int] = field(default_factory=dict)
    reason: str = ""

    def is_strong(self, k: int) -> bool:
        return self.strong_order == k and self.leftmost_exact

    def to_json(self):
        return {
            "strong_order": self.strong_order,
            "leftmost_exact": self.leftmost_exact,
            "reason": self.reason,
            "per_diagonal": [d.to_json() for _, d in sorted(self.per_diagonal.items())],
        }


def diagonal_order(a: LambdaArray, j: int) -> DiagonalOrder:
    col = a.column(j)
    if not col:
        raise LambdaError(f"column {j} has no samples on window N={a.N}")
    table = forward_differences(col)
    nonzero = [k for k, row in enumerate(table) if any(row)]
    return DiagonalOrder(j, len(col), max(nonzero) if nonzero else 0, not nonzero)


def strong_order(a: LambdaArray, columns: Iterable[int] | None = None) -> OrderReport:
    """Bound on column orders, when the window certifies one.

    The verdict is max over determined columns, provided no undetermined
    column is already known to exceed it. The leftmost column is j = lo + ... ;
    for index-1 arrays that is j = 1.
    """
    cols = list(columns) if columns is not None else list(range(a.lo, a.N - a.lo + 1))
    per = {j: diagonal_order(a, j) for j in cols}
    sizes = {j: d.samples for j, d in per.items()}
    det = [d for d in per.values() if d.determined]
    first = per.get(1)
    if not det:
        return OrderReport(per, None, False, sizes, "no column has enough samples")
    K = max(d.order for d in det)
    over = [d.j for d in per.values() if not d.determined and d.lower_bound > K]
    if over:
        return OrderReport(
            per, None, False, sizes,
            f"columns {over} need order above {K}; no bound is certified on this window",
        )
    if first is None or not first.determined:
        return OrderReport(per, K, False, sizes, "leftmost column undetermined")
    return OrderReport(per, K, first.order == K, sizes)


def extend_homogeneous(a: LambdaArray, c) -> LambdaArray:
    """Add index-0 entries, all equal to c."""
    c = Fraction(c)
    if c == 0:
        raise LambdaError("c must be nonzero")
    if a.lo != 1:
        raise LambdaError("array already extended")
    vals = dict(a.vals)
    for i in range(0, a.N + 1):
        vals[(i, 0)] = c
        vals[(0, i)] = c
    return LambdaArray(vals, a.N, lo=0)


@dataclass(frozen=True)
class HomogeneityVerdict:
    homogeneous: bool
    base: OrderReport
    extended: OrderReport

    def __bool__(self):
        return self.homogeneous


def homogeneity_check(a: LambdaArray, c) -> HomogeneityVerdict:
    """Does the enlarged array keep every column within the original order?

    Columns are compared on the same index set as the base report (plus the
    new column 0), so each extended column has one more sample than before.
    """
    base = strong_order(a)
    ext = extend_homogeneous(a, c)
    ext_rep = strong_order(ext, columns=[0] + sorted(base.per_diagonal))
    ok = (
        base.strong_order is not None
        and ext_rep.strong_order is not None
        and ext_rep.strong_order <= base.strong_order
    )
    return HomogeneityVerdict(ok, base, ext_rep)


def lambda_json_dumps(a: LambdaArray) -> str:
    return json.dumps(a.to_json())
