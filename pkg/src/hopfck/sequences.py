"""Generator sequences t_1, t_2, ... of Hopf subalgebras, and the named families.

A ``Seq`` holds one nonzero combination of trees per degree with t_1 the
single vertex. ``verify_subhopf`` decides by exact linear algebra whether the
algebra they generate is closed under the coproduct, degree by degree.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .forest_core import (
    LEAF,
    Forest,
    Tree,
    corolla,
    enumerate_trees,
    ladder,
    symmetry_factor,
)
from .hopf_ck import (
    Elem,
    SeriesElem,
    TensorElem,
    bplus,
    coproduct,
    growth_N,
    prelie_graft,
    product,
    series_exp,
    series_log,
    series_mul,
)
from .linalg import SpanSolver

__all__ = [
    "PowerSeries",
    "Seq",
    "SeqError",
    "SubHopfReport",
    "dse_solve",
    "family_ladders",
    "family_dse_ab",
    "family_cm",
    "family_corollas",
    "family_zn",
    "family_prelie_ext",
    "family_abc",
    "family_abc_array",
    "family_ladders_with_leaves",
    "verify_subhopf",
    "monomials",
    "partitions",
]


class SeqError(ValueError):
    """A sequence violates the generator-sequence invariants."""


@dataclass(frozen=True)
class PowerSeries:
    """Truncated rational power series; index = power of x."""

    coeffs: tuple[Fraction, ...]

    def __init__(self, coeffs: Iterable):
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in coeffs))

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __len__(self):
        return len(self.coeffs)

    def to_json(self):
        return [str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, obj) -> "PowerSeries":
        return cls(Fraction(c) for c in obj)

    @classmethod
    def polynomial(cls, *coeffs) -> "PowerSeries":
        return cls(coeffs)

    @classmethod
    def geometric(cls, order: int) -> "PowerSeries":
        return cls([1] * (order + 1))

    @classmethod
    def exponential(cls, alpha, order: int) -> "PowerSeries":
        alpha = Fraction(alpha)
        return cls(alpha**k / math.factorial(k) for k in range(order + 1))

    @classmethod
    def binomial(cls, base, exponent, order: int) -> "PowerSeries":
        """(1 + base*x)^exponent."""
        base, exponent = Fraction(base), Fraction(exponent)
        out, c = [], Fraction(1)
        for k in range(order + 1):
            out.append(c)
            c = c * (exponent - k) / (k + 1) * base
        return cls(out)

    @classmethod
    def dse_family(cls, alpha, beta, order: int) -> "PowerSeries":
        """The f with (1 - alpha*beta*x) f' = alpha f, f(0) = 1."""
        alpha, beta = Fraction(alpha), Fraction(beta)
        if alpha == 0:
            return cls([1])
        if beta == 0:
            return cls.exponential(alpha, order)
        return cls.binomial(-alpha * beta, -1 / beta, order)


@dataclass(frozen=True)
class Seq:
    """t_1..t_N; ``gens[n-1]`` is t_n."""

    gens: tuple[Elem, ...]
    name: str | None = None

    def __post_init__(self):
        gens = tuple(self.gens)
        object.__setattr__(self, "gens", gens)
        if not gens:
            raise SeqError("a sequence needs at least t_1")
        if gens[0] != Elem.tree(LEAF):
            raise SeqError(f"t_1 must be the single vertex, got {gens[0]}")
        for n, t in enumerate(gens, start=1):
            if t.is_zero():
                raise SeqError(f"t_{n} is zero")
            if not t.is_homogeneous(n):
                raise SeqError(f"t_{n} is not homogeneous of degree {n}")
            if not t.is_tree_combination():
                raise SeqError(f"t_{n} contains a product of trees")

    @property
    def N(self) -> int:
        return len(self.gens)

    def t(self, n: int) -> Elem:
        if not 1 <= n <= self.N:
            raise IndexError(f"degree {n} outside 1..{self.N}")
        return self.gens[n - 1]

    def truncate(self, n: int) -> "Seq":
        return Seq(self.gens[:n], self.name)

    def series(self) -> SeriesElem:
        return SeriesElem([Elem.one()] + list(self.gens), self.N)

    def to_json(self):
        return {"name": self.name, "N": self.N, "gens": [g.to_json() for g in self.gens]}

    @classmethod
    def from_json(cls, obj) -> "Seq":
        gens = tuple(Elem.from_json(g) for g in obj["gens"])
        if len(gens) != obj["N"]:
            raise SeqError("N does not match the number of generators")
        return cls(gens, obj.get("name"))

    def to_text(self) -> str:
        return "\n".join(f"degree {n}: {t}" for n, t in enumerate(self.gens, start=1))

    @classmethod
    def from_text(cls, text: str, name: str | None = None) -> "Seq":
        gens = []
        for line in text.strip().splitlines():
            head, _, body = line.partition(":")
            n = int(head.split()[1])
            if n != len(gens) + 1:
                raise SeqError(f"degree {n} out of order")
            gens.append(Elem.parse(body))
        return cls(tuple(gens), name)


# ---------------------------------------------------------------- Dyson-Schwinger


def _compose(f: PowerSeries, x: SeriesElem) -> SeriesElem:
    # f(X) by Horner, truncated at x.N
    out = SeriesElem([Elem.one().scale(f[len(f) - 1])] if len(f) else [], x.N)
    for k in range(len(f) - 2, -1, -1):
        out = series_mul(out, x) + SeriesElem([Elem.one().scale(f[k])], x.N)
    return out


def dse_solve(f: PowerSeries, N: int, name: str | None = None) -> Seq:
    """Solve X = B+(f(X)) degree by degree; x_n = B+(degree n-1 part of f(X))."""
    if f[0] != 1:
        raise ValueError("f(0) must be 1")
    if N < 1:
        raise ValueError("N must be at least 1")
    xs: list[Elem] = []
    for n in range(1, N + 1):
        X = SeriesElem([Elem()] + xs, n - 1)
        fx = _compose(PowerSeries(f.coeffs[:n]), X)
        xn = bplus(fx[n - 1])
        if xn.is_zero():
            raise SeqError(f"x_{n} vanishes; f is degenerate on this window")
        xs.append(xn)
    return Seq(tuple(xs), name or "dse")


def family_ladders(N: int) -> Seq:
    return Seq(tuple(Elem.tree(ladder(n)) for n in range(1, N + 1)), "ladders")


def _dse_ab_weight(a: Fraction, b: Fraction, k: int) -> Fraction:
    # value of the multi-index coefficient with k arguments for lambda_{i,j} = a i + b
    out = Fraction(1)
    for j in range(k):
        out *= a + b - j * b
    return out


def family_dse_ab(a, b, N: int) -> Seq:
    """The sequence whose structure constants are a*i + b.

    Uses the closed product over vertices, with k(s) the fertility of s:
    prod_{j=0}^{k-1} (a + b - j b).
    """
    a, b = Fraction(a), Fraction(b)
    if a + b == 0:
        raise SeqError("a + b = 0 makes the array degenerate")
    gens = []
    for n in range(1, N + 1):
        acc = {}
        for t in enumerate_trees(n):
            w = Fraction(1)
            for v in t.vertices():
                w *= _dse_ab_weight(a, b, len(v.children))
                if not w:
                    break
            if w:
                acc[Forest((t,))] = w / symmetry_factor(t)
        gens.append(Elem(acc))
    return Seq(tuple(gens), f"dse_ab({a},{b})")


def dse_ab_series(a, b, order: int) -> PowerSeries:
    """The f whose Dyson-Schwinger solution matches family_dse_ab(a, b)."""
    a, b = Fraction(a), Fraction(b)
    if b == 0:
        return PowerSeries.exponential(a, order)
    return PowerSeries.binomial(b, (a + b) / b, order)


def family_cm(N: int) -> Seq:
    """Connes-Moscovici generators: iterate the growth operator from the single vertex."""
    gens = [Elem.tree(LEAF)]
    while len(gens) < N:
        gens.append(growth_N(gens[-1]))
    return Seq(tuple(gens), "cm")


def family_corollas(k: int, N: int) -> Seq:
    """t_n = (n!)^k c_n."""
    if k < 0:
        raise ValueError("scale exponent must be nonnegative")
    gens = tuple(
        Elem.tree(corolla(n), Fraction(math.factorial(n)) ** k) for n in range(1, N + 1)
    )
    return Seq(gens, f"corollas(k={k})")


def ladder_primitives(N: int) -> list[Elem]:
    """p_1..p_N: graded pieces of log(1 + sum of ladders)."""
    X = SeriesElem([Elem.one()] + [Elem.tree(ladder(k)) for k in range(1, N + 1)], N)
    L = series_log(X)
    return [L[k] for k in range(1, N + 1)]


def family_zn(n: int, b, N: int) -> Seq:
    """z_k = B+(degree k-1 part of exp(p_1 + ... + p_{n-1} + b p_n))."""
    b = Fraction(b)
    if b == 0:
        raise SeqError("b must be nonzero")
    if n < 1:
        raise ValueError("n must be positive")
    ps = ladder_primitives(max(N - 1, n))
    comps = [Elem()]
    for k in range(1, N):
        if k < n:
            comps.append(ps[k - 1])
        elif k == n:
            comps.append(ps[k - 1].scale(b))
        else:
            comps.append(Elem())
    E = series_exp(SeriesElem(comps, N - 1))
    gens = tuple(bplus(E[k - 1]) for k in range(1, N + 1))
    return Seq(gens, f"Z({n},{b})")


def _is_primitive(x: Elem) -> bool:
    one = Elem.one()
    return coproduct(x) == TensorElem.pure(x, one) + TensorElem.pure(one, x)


def family_prelie_ext(base: Sequence[Elem], X: Elem, N: int) -> Seq:
    """Extend t'_1..t'_M by t_n = t_{n-M} . X, for X primitive of degree M."""
    M = len(base)
    if M < 1:
        raise ValueError("empty base")
    if X.is_zero() or not X.is_homogeneous(M):
        raise SeqError(f"X must be nonzero and homogeneous of degree {M}")
    if not _is_primitive(X):
        raise SeqError("X is not primitive")
    prefix = Seq(tuple(base), "prefix")
    report = verify_subhopf(prefix)
    if not report.ok:
        raise SeqError(f"base prefix is not closed under the coproduct: {report.message}")
    mons = monomials(prefix, M)
    _, residual = SpanSolver([m.terms for _, m in mons]).express(X.terms)
    if residual:
        raise SeqError("X does not lie in the algebra generated by the base")
    gens = list(base)
    while len(gens) < N:
        gens.append(prelie_graft(gens[len(gens) - M], X))
    return Seq(tuple(gens[:N]), "prelie_ext")


def family_abc_array(a, b, c, N: int):
    """Parity-defined array; returns a LambdaArray on the window."""
    from .lambda_arrays import LambdaArray

    a, b, c = Fraction(a), Fraction(b), Fraction(c)

    def entry(i: int, j: int) -> Fraction:
        if i % 2 == 0 and j % 2 == 0:
            return a * (i // 2) + b
        if i % 2 == 1 and j % 2 == 0:
            return a * (i // 2) + (a + b) / 2
        if i % 2 == 0:
            return Fraction(0)
        return c

    return LambdaArray.from_function(entry, N)


def family_abc(a, b, c, N: int) -> Seq:
    from .lambda_arrays import reconstruct_seq

    a, b, c = Fraction(a), Fraction(b), Fraction(c)
    if a + b == 0 or c == 0:
        raise SeqError("need a + b != 0 and c != 0")
    s = reconstruct_seq(family_abc_array(a, b, c, N), N)
    return Seq(s.gens, f"abc({a},{b},{c})")


def family_ladders_with_leaves(a, b, N: int) -> Seq:
    """X = B+((1 + bX) / (1 - a o)): ladders with extra leaves, weighted."""
    a, b = Fraction(a), Fraction(b)
    if a + b == 0:
        raise SeqError("a + b = 0 kills t_2")
    geo = SeriesElem(
        [Elem.forest(Forest([LEAF] * k), a**k) for k in range(N)], N - 1
    )
    xs: list[Elem] = []
    for n in range(1, N + 1):
        X = SeriesElem([Elem.one()] + [x.scale(b) for x in xs], n - 1)
        inner = series_mul(X, SeriesElem(geo.comps[:n], n - 1))
        xs.append(bplus(inner[n - 1]))
    return Seq(tuple(xs), f"ladders_leaves({a},{b})")


# ---------------------------------------------------------------- subHopf check


def partitions(n: int, max_part: int | None = None) -> list[tuple[int, ...]]:
    """Partitions of n as non-increasing tuples."""
    if max_part is None:
        max_part = n
    if n == 0:
        return [()]
    out = []
    for p in range(min(n, max_part), 0, -1):
        for rest in partitions(n - p, p):
            out.append((p,) + rest)
    return out


def monomials(s: Seq, degree: int) -> list[tuple[tuple[int, ...], Elem]]:
    """Products t_{p1} t_{p2} ... over partitions of degree."""
    out = []
    for part in partitions(degree):
        m = Elem.one()
        for p in part:
            m = product(m, s.t(p))
        out.append((part, m))
    return out


@dataclass
class SubHopfReport:
    ok: bool
    checked_up_to: int
    failure_degree: int | None = None
    failure_bidegree: tuple[int, int] | None = None
    residual: TensorElem | None = None
    expansions: dict = field(default_factory=dict)

    @property
    def message(self) -> str:
        if self.ok:
            return f"closed under the coproduct through degree {self.checked_up_to}"
        return (
            f"degree {self.failure_degree}, bidegree {self.failure_bidegree}: "
            f"residual {self.residual}"
        )

    def to_json(self):
        return {
            "ok": self.ok,
            "checked_up_to": self.checked_up_to,
            "failure_degree": self.failure_degree,
            "failure_bidegree": list(self.failure_bidegree) if self.failure_bidegree else None,
            "residual": self.residual.to_json() if self.residual is not None else None,
        }


def _express_block(block: TensorElem, left, right):
    # block = sum C[a,b] left[a] (x) right[b]; returns (C, residual)
    ls = SpanSolver([m.terms for _, m in left])
    rs = SpanSolver([m.terms for _, m in right])
    by_right: dict[Forest, dict] = defaultdict(dict)
    for (f, g), c in block.terms.items():
        by_right[g][f] = c
    X: dict[int, dict] = defaultdict(dict)  # X[alpha][g]
    for g, col in by_right.items():
        combo, _ = ls.express(col)
        for alpha, v in combo.items():
            X[alpha][g] = v
    C: dict[tuple[int, int], Fraction] = {}
    for alpha, row in X.items():
        combo, _ = rs.express(row)
        for beta, v in combo.items():
            C[(alpha, beta)] = v
    recon: dict = defaultdict(Fraction)
    for (alpha, beta), v in C.items():
        for f, c1 in left[alpha][1].terms.items():
            for g, c2 in right[beta][1].terms.items():
                recon[(f, g)] += v * c1 * c2
    residual = block - TensorElem(recon)
    return C, residual


def verify_subhopf(s: Seq, keep_expansions: bool = False) -> SubHopfReport:
    """Check Delta(t_n) lies in A (x) A for every n, bidegree by bidegree."""
    mons = {d: monomials(s, d) for d in range(1, s.N)}
    expansions = {}
    for n in range(2, s.N + 1):
        delta = coproduct(s.t(n))
        for p in range(1, n):
            block = delta.bidegree(p, n - p)
            C, residual = _express_block(block, mons[p], mons[n - p])
            if residual:
                return SubHopfReport(False, n - 1, n, (p, n - p), residual)
            if keep_expansions:
                expansions[(n, p)] = {
                    (mons[p][a][0], mons[n - p][b][0]): v for (a, b), v in C.items()
                }
    return SubHopfReport(True, s.N, expansions=expansions)


def seq_json_dumps(s: Seq) -> str:
    return json.dumps(s.to_json(), sort_keys=True)
