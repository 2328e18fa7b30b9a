"""Tree Feynman rules, Green functions, and generalized renormalization group equations.

An infinitesimal character ``Char`` assigns a rational to each tree. Its
Feynman rules send a tree to a polynomial in L (``LPoly``); the image of a
generator sequence is the Green function G(x, L) = 1 + sum_n Q_n(L) x^n.

Conventions fixed here:

* beta^(j)(x) = sum_k beta_k^(j) x^k, and the order-m equation reads
  dG/dL = sum_{j<=m} beta^(j)(x) (d/dx)^j G + gamma0(x).
* c_{n,i} is the coefficient of Q_i in dQ_n/dL. On the diagonal d = n - i it
  is the polynomial p_d(i) = sum_j beta_{d+j}^(j) i!/(i-j)!, so each
  diagonal is fitted on its own.
"""
from __future__ import annotations

import math
import random
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .forest_core import Forest, Tree, parse_tree, trees_up_to
from .hopf_ck import Elem, _forest_coproduct, coproduct
from .lambda_arrays import LambdaArray, extract_lambda, forward_differences
from .linalg import SpanSolver
from .sequences import Seq

__all__ = [
    "Char",
    "LPoly",
    "GreenFn",
    "CTriangle",
    "BetaSystem",
    "FitResult",
    "RGEError",
    "feynman_phi",
    "feynman_phi_oracle",
    "phi_bivariate",
    "green_function",
    "c_triangle",
    "fit_beta",
    "grge_residual",
]


class RGEError(ValueError):
    pass


# ---------------------------------------------------------------- polynomials in L


class LPoly:
    """Polynomial in L with rational coefficients; index = power of L."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("LPoly is immutable")

    @classmethod
    def const(cls, c) -> "LPoly":
        return cls([c])

    @classmethod
    def monomial(cls, k: int, c=1) -> "LPoly":
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        """-1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LPoly.const(other)
        return isinstance(other, LPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other: "LPoly") -> "LPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return LPoly(self[k] + other[k] for k in range(n))

    def __sub__(self, other: "LPoly") -> "LPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return LPoly(self[k] - other[k] for k in range(n))

    def __neg__(self):
        return LPoly(-c for c in self.coeffs)

    def __mul__(self, other):
        if isinstance(other, LPoly):
            if not self.coeffs or not other.coeffs:
                return LPoly()
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for a, x in enumerate(self.coeffs):
                if x:
                    for b, y in enumerate(other.coeffs):
                        out[a + b] += x * y
            return LPoly(out)
        k = Fraction(other)
        return LPoly(c * k for c in self.coeffs)

    __rmul__ = __mul__

    def derivative(self) -> "LPoly":
        return LPoly(k * c for k, c in enumerate(self.coeffs) if k)

    def __call__(self, x) -> Fraction:
        out = Fraction(0)
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def to_json(self):
        return [str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, obj) -> "LPoly":
        return cls(Fraction(c) for c in obj)

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c:
                parts.append(str(c) if k == 0 else f"{c}*L" if k == 1 else f"{c}*L^{k}")
        return " + ".join(parts)

    def __repr__(self):
        return f"LPoly({str(self)!r})"


# ---------------------------------------------------------------- characters


class Char:
    """Infinitesimal character: rational values on trees, zero on 1 and on products."""

    def __init__(self, values: Mapping[Tree, object] | None = None, name: str = "custom"):
        vals = {}
        for t, v in (values or {}).items():
            v = Fraction(v)
            if v:
                vals[t] = v
        self.values: dict[Tree, Fraction] = vals
        self.name = name
        self._phi: dict[Tree, LPoly] = {}
        self._conv: dict[tuple[int, Forest], Fraction] = {}
        self._lock = threading.Lock()

    def __call__(self, t: Tree) -> Fraction:
        return self.values.get(t, Fraction(0))

    def on_forest(self, f: Forest) -> Fraction:
        return self(f.trees[0]) if len(f.trees) == 1 else Fraction(0)

    def on_elem(self, x: Elem) -> Fraction:
        return sum((c * self.on_forest(f) for f, c in x.terms.items()), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, Char) and self.values == other.values

    def __hash__(self):
        return hash(frozenset(self.values.items()))

    @classmethod
    def generic(cls, N: int) -> "Char":
        """Distinct primes 2, 3, 5, ... on all trees of size <= N in canonical order."""
        trees = trees_up_to(N)
        return cls(dict(zip(trees, _primes(len(trees)))), "generic")

    @classmethod
    def tree_factorial(cls) -> "Char":
        """sigma(o) = 1 and 0 elsewhere; its rules give L^|t| / t!."""
        return cls({Tree(): 1}, "tree-factorial")

    @classmethod
    def random(cls, seed: int, N: int, lo: int = -6, hi: int = 6) -> "Char":
        """Seeded random small rationals; the single vertex always gets a nonzero value."""
        rng = random.Random(seed)
        vals = {}
        for t in trees_up_to(N):
            v = Fraction(rng.randint(lo, hi), rng.randint(1, 4))
            while t.size == 1 and v == 0:
                v = Fraction(rng.randint(lo, hi), rng.randint(1, 4))
            vals[t] = v
        return cls(vals, f"random(seed={seed})")

    def to_json(self):
        return {str(t): str(v) for t, v in sorted(self.values.items(), key=lambda kv: kv[0].key)}

    @classmethod
    def from_json(cls, obj) -> "Char":
        return cls({parse_tree(k): Fraction(v) for k, v in obj.items()})


def _primes(n: int) -> list[int]:
    out, k = [], 2
    while len(out) < n:
        if all(k % p for p in out if p * p <= k):
            out.append(k)
        k += 1
    return out


# ---------------------------------------------------------------- Feynman rules


def _flatten(t: Tree) -> tuple[list[Tree], list[int]]:
    # preorder vertices and parent indices (-1 for the root)
    verts, parents = [], []
    stack = [(t, -1)]
    while stack:
        v, p = stack.pop()
        idx = len(verts)
        verts.append(v)
        parents.append(p)
        for c in reversed(v.children):
            stack.append((c, idx))
    return verts, parents


def _phi_tree(sigma: Char, t: Tree) -> LPoly:
    hit = sigma._phi.get(t)
    if hit is not None:
        return hit
    verts, parents = _flatten(t)
    n = len(verts)
    kids: list[list[int]] = [[] for _ in range(n)]
    for v in range(1, n):
        kids[parents[v]].append(v)
    acc = [Fraction(0)] * (n + 1)
    for mask in range(1 << (n - 1)):
        # edge v (v >= 1) joins v to its parent; bit v-1 set puts the edge in S
        root = list(range(n))
        for v in range(1, n):
            if not (mask >> (v - 1)) & 1:
                root[v] = root[parents[v]]
        comps = [v for v in range(n) if root[v] == v]
        weight = Fraction(1)
        for r in comps:
            weight *= sigma(_component(r, kids, root))
            if not weight:
                break
        if not weight:
            continue
        # contracted tree: component r hangs below the component of its parent vertex
        below = {r: 1 for r in comps}
        for r in reversed(comps):
            if r:
                below[root[parents[r]]] += below[r]
        fact = math.prod(below.values())
        acc[len(comps)] += weight / fact
    out = LPoly(acc)
    with sigma._lock:
        sigma._phi[t] = out
    return out


def _component(v: int, kids: list[list[int]], root: list[int]) -> Tree:
    # the piece containing v, below v
    return Tree(_component(c, kids, root) for c in kids[v] if root[c] == root[v])


def _as_elem(x) -> Elem:
    if isinstance(x, Elem):
        return x
    if isinstance(x, Tree):
        return Elem.tree(x)
    if isinstance(x, Forest):
        return Elem.forest(x)
    raise TypeError(f"cannot apply Feynman rules to {type(x).__name__}")


def feynman_phi(sigma: Char, x) -> LPoly:
    """Sum over edge subsets: product of sigma on the pieces, times L^#pieces / (contracted tree)!."""
    out = LPoly()
    for f, c in _as_elem(x).terms.items():
        term = LPoly.const(c)
        for t in f.trees:
            term = term * _phi_tree(sigma, t)
        out = out + term
    return out


def _conv_power(sigma: Char, k: int, f: Forest) -> Fraction:
    # sigma^{*k}(f), sigma extended by 0 on 1 and on products
    if k == 0:
        return Fraction(1 if not f.trees else 0)
    if f.size < k:
        return Fraction(0)
    key = (k, f)
    hit = sigma._conv.get(key)
    if hit is not None:
        return hit
    total = Fraction(0)
    for left, right, mult in _forest_coproduct(f):
        s = sigma.on_forest(right)
        if s:
            total += mult * s * _conv_power(sigma, k - 1, left)
    with sigma._lock:
        sigma._conv[key] = total
    return total


def feynman_phi_oracle(sigma: Char, x) -> LPoly:
    """exp of L*sigma under convolution, truncated by degree; not multiplicative by construction."""
    out = LPoly()
    for f, c in _as_elem(x).terms.items():
        out = out + LPoly(
            c * _conv_power(sigma, k, f) / math.factorial(k) for k in range(f.size + 1)
        )
    return out


def phi_bivariate(sigma: Char, x) -> dict[tuple[int, int], Fraction]:
    """m o (phi_L1 (x) phi_L2) o coproduct, as {(power of L1, power of L2): coefficient}."""
    out: dict[tuple[int, int], Fraction] = {}
    for (left, right), c in coproduct(_as_elem(x)).terms.items():
        p, q = feynman_phi(sigma, left), feynman_phi(sigma, right)
        for a, x1 in enumerate(p.coeffs):
            for b, y1 in enumerate(q.coeffs):
                v = out.get((a, b), Fraction(0)) + c * x1 * y1
                if v:
                    out[(a, b)] = v
                else:
                    out.pop((a, b), None)
    return out


# ---------------------------------------------------------------- Green functions


@dataclass(frozen=True)
class GreenFn:
    """Q[0] = 1, Q[n] = phi(t_n); G_0 = 1 and G_n = scale * Q[n] for n >= 1."""

    Q: tuple[LPoly, ...]
    N: int
    scale: Fraction = Fraction(1)

    def G(self, n: int) -> LPoly:
        if n == 0:
            return LPoly.const(1)
        if 0 < n <= self.N:
            return self.Q[n] * self.scale
        return LPoly()

    def leading(self) -> list[Fraction]:
        return [q[n] for n, q in enumerate(self.Q)]

    def linear(self) -> list[Fraction]:
        return [q[1] for q in self.Q]

    def to_json(self):
        return {"N": self.N, "scale": str(self.scale), "Q": [q.to_json() for q in self.Q]}


def green_function(sigma: Char, s: Seq, scale=1) -> GreenFn:
    Q = [LPoly.const(1)] + [feynman_phi(sigma, s.t(n)) for n in range(1, s.N + 1)]
    return GreenFn(tuple(Q), s.N, Fraction(scale))


# ---------------------------------------------------------------- c-triangle


@dataclass(frozen=True)
class CTriangle:
    """c[(n, i)] for 1 <= i < n <= N, plus sigma(t_n) (the i = 0 data).

    ``oracle`` is one of "agree", "disabled" (sigma(o) = 0), "rank-deficient"
    (some Q_i has degree < i, so only consistency was checked), "mismatch".
    """

    N: int
    c: dict[tuple[int, int], Fraction]
    sigma_t: tuple[Fraction, ...]  # index n = 0..N, entry 0 unused
    oracle: str = "disabled"
    deficient_rows: tuple[int, ...] = ()
    mismatch: tuple[int, int] | None = None

    def __call__(self, n: int, i: int) -> Fraction:
        if i == n:
            return Fraction(0)
        return self.c[(n, i)]

    def diagonal(self, d: int) -> list[Fraction]:
        """c_{d+i, i} for i = 1 .. N - d."""
        return [self.c[(d + i, i)] for i in range(1, self.N - d + 1)]

    def to_json(self):
        return {
            "N": self.N,
            "rows": [[str(self.c[(n, i)]) for i in range(1, n)] for n in range(2, self.N + 1)],
            "sigma_t": [str(v) for v in self.sigma_t[1:]],
            "oracle": self.oracle,
            "deficient_rows": list(self.deficient_rows),
        }


def c_triangle(s: Seq, sigma: Char, lam: LambdaArray | None = None, oracle: bool = True) -> CTriangle:
    """Primary path from the structure constants; oracle path from the bivariate Feynman rules."""
    N = s.N
    lam = lam if lam is not None else extract_lambda(s)
    sig = [Fraction(0)] + [sigma.on_elem(s.t(n)) for n in range(1, N + 1)]
    c = {(n, i): lam(i, n - i) * sig[n - i] for n in range(2, N + 1) for i in range(1, n)}
    if not oracle or sigma(Tree()) == 0:
        return CTriangle(N, c, tuple(sig))

    Q = [LPoly.const(1)] + [feynman_phi(sigma, s.t(n)) for n in range(1, N + 1)]
    deficient = []
    for n in range(2, N + 1):
        biv = phi_bivariate(sigma, s.t(n))
        lin = LPoly(biv.get((1, q), 0) for q in range(n + 1))
        basis = [dict(enumerate(Q[i].coeffs)) for i in range(n)]
        solver = SpanSolver(basis)
        if solver.rank == n:
            combo, resid = solver.express(dict(enumerate(lin.coeffs)))
            if resid:
                return CTriangle(N, c, tuple(sig), "mismatch", tuple(deficient), (n, -1))
            if combo.get(0, 0) != sig[n]:
                return CTriangle(N, c, tuple(sig), "mismatch", tuple(deficient), (n, 0))
            for i in range(1, n):
                if combo.get(i, 0) != c[(n, i)]:
                    return CTriangle(N, c, tuple(sig), "mismatch", tuple(deficient), (n, i))
        else:
            deficient.append(n)
            rest = lin - LPoly.const(sig[n])
            for i in range(1, n):
                rest = rest - Q[i] * c[(n, i)]
            if rest:
                return CTriangle(N, c, tuple(sig), "mismatch", tuple(deficient), (n, -1))
    status = "rank-deficient" if deficient else "agree"
    return CTriangle(N, c, tuple(sig), status, tuple(deficient))


# ---------------------------------------------------------------- beta fitting


@dataclass(frozen=True)
class BetaSystem:
    m: int
    beta: dict[tuple[int, int], Fraction]  # (j, k) -> beta_k^(j)
    gamma0: tuple[Fraction, ...]  # index n = 0..N
    N: int
    scale: Fraction = Fraction(1)

    def beta_series(self, j: int) -> list[Fraction]:
        return [self.beta.get((j, k), Fraction(0)) for k in range(self.N + 1)]

    @property
    def homogeneous(self) -> bool:
        return not any(self.gamma0)

    def to_json(self):
        return {
            "m": self.m,
            "beta": [[j, k, str(v)] for (j, k), v in sorted(self.beta.items()) if v],
            "gamma0": [str(v) for v in self.gamma0],
            "scale": str(self.scale),
        }

    @classmethod
    def from_json(cls, obj) -> "BetaSystem":
        g = tuple(Fraction(v) for v in obj["gamma0"])
        beta = {(int(j), int(k)): Fraction(v) for j, k, v in obj["beta"]}
        return cls(int(obj["m"]), beta, g, len(g) - 1, Fraction(obj.get("scale", 1)))


@dataclass(frozen=True)
class FitResult:
    """``ok``: every diagonal agrees with a polynomial of degree <= m.

    ``system`` is always present: diagonals are fitted on their leading
    samples even when a later sample deviates, so the residual of a failed
    fit can be inspected. ``verified`` lists diagonals with >= m + 2 samples
    (a deviation there would have been seen); ``underdetermined`` those with
    fewer than m + 1, where the fit is chosen to make gamma0 vanish.
    """

    ok: bool
    m: int
    system: BetaSystem
    witness: tuple[int, int] | None = None
    verified: tuple[int, ...] = ()
    underdetermined: tuple[int, ...] = ()

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {
            "ok": self.ok,
            "m": self.m,
            "witness": list(self.witness) if self.witness else None,
            "verified_diagonals": list(self.verified),
            "underdetermined_diagonals": list(self.underdetermined),
            "system": self.system.to_json(),
        }


def _newton_eval(diffs: list[Fraction], x0: int, x: int) -> Fraction:
    # Newton forward form anchored at x0 with unit steps
    out, binom = Fraction(0), Fraction(1)
    for k, d in enumerate(diffs):
        out += d * binom
        binom = binom * (x - x0 - k) / (k + 1)
    return out


def fit_beta(tri: CTriangle, m: int, scale=1) -> FitResult:
    """Fit each diagonal by a polynomial of degree <= m and read off beta and gamma0."""
    if m < 0:
        raise RGEError("order must be nonnegative")
    scale = Fraction(scale)
    N = tri.N
    beta: dict[tuple[int, int], Fraction] = {}
    gamma0 = [Fraction(0)] * (N + 1)
    witness = None
    verified, under = [], []
    for d in range(1, N + 1):
        samples = tri.diagonal(d) if d < N else []
        M = len(samples)
        target0 = scale * tri.sigma_t[d]
        if M >= m + 1:
            diffs = [row[0] for row in forward_differences(samples)[: m + 1]]
            anchor = 1
            if M >= m + 2:
                verified.append(d)
        else:
            # too few samples to pin the polynomial: also pass through (0, target0),
            # which puts this diagonal's share of gamma0 at zero
            under.append(d)
            diffs = [row[0] for row in forward_differences([target0] + samples)]
            anchor = 0
        for idx, v in enumerate(samples, start=1):
            if _newton_eval(diffs, anchor, idx) != v and witness is None:
                witness = (d + idx, idx)
        # values p(0..m), then falling-factorial coefficients B_j = (j-th difference at 0) / j!
        vals = [_newton_eval(diffs, anchor, x) for x in range(m + 1)]
        table = forward_differences(vals)
        for j in range(m + 1):
            bj = table[j][0] / math.factorial(j)
            if bj:
                beta[(j, d + j)] = bj
        gamma0[d] = target0 - vals[0]
    system = BetaSystem(m, beta, tuple(gamma0), N, scale)
    return FitResult(witness is None, m, system, witness, tuple(verified), tuple(under))


def grge_residual(g: GreenFn, bs: BetaSystem) -> list[LPoly]:
    """R_n = dG_n/dL - sum_{j,k} beta_k^(j) (n-k+j)!/(n-k)! G_{n-k+j} - gamma0_n, n = 0..N."""
    N = min(g.N, bs.N)
    out = []
    for n in range(N + 1):
        r = g.G(n).derivative()
        for (j, k), b in bs.beta.items():
            if k > n:
                continue
            src = n - k + j
            r = r - g.G(src) * (b * Fraction(math.factorial(src), math.factorial(n - k)))
        if n < len(bs.gamma0):
            r = r - LPoly.const(bs.gamma0[n])
        out.append(r)
    return out
