"""Constructors and matchers for the classified families of structure-constant arrays.

Order 0: ladders and Z(n, b). Order 1: the five cases A..E. Order >= 2: corollas
rescaled so that only the leftmost column survives. The 0/1 arrays (every
rightmost entry 0 or 1) are covered by the Seq01 kinds together with the
series G(X) = (1 + X) / (1 - (-X)^m)^(1/m) for their corolla coefficients.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .forest_core import corolla
from .lambda_arrays import LambdaArray, LambdaError, check_prelie, nondegeneracy_failures
from .sequences import PowerSeries, Seq, partitions

__all__ = [
    "FamilySpec",
    "MatchResult",
    "FamilyError",
    "KINDS",
    "family_array",
    "match_family",
    "seq01_classify",
    "seq01_classify_array",
    "seq01_an",
    "seq01_an_via_cycle_index",
    "seq01_an_piecewise",
    "seq01_corolla_coeff",
    "cycle_index",
    "random_spec",
    "ExtensionSearch",
    "search_second_order_extensions",
]


class FamilyError(ValueError):
    pass


# kind -> ordered parameter names
KINDS: dict[str, tuple[str, ...]] = {
    "Ladders": ("scale",),
    "Z": ("n", "b", "scale"),
    "CaseA": ("a1", "a2", "b"),
    "CaseB": ("a1", "a2"),
    "CaseC": ("a1", "a2"),
    "CaseD": ("a1", "a2"),
    "CaseE": ("a1", "b"),
    "ScaledCorolla": ("k",),
    "CorollaDiagonal": ("coeffs",),
    "Seq01AllOnes": (),
    "Seq01A": ("m",),
    "Seq01B": ("m",),
    "Seq01C": ("m",),
}

_INT_PARAMS = {"n", "k", "m"}
_DEFAULTS = {"scale": Fraction(1)}


def _param(name: str, v):
    if name == "coeffs":
        return tuple(Fraction(c) for c in v)
    if name in _INT_PARAMS:
        f = Fraction(v)
        if f.denominator != 1:
            raise FamilyError(f"parameter {name} must be an integer, got {v}")
        return int(f)
    return Fraction(v)


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    params: tuple[tuple[str, object], ...] = ()

    @classmethod
    def make(cls, kind: str, **params) -> "FamilySpec":
        if kind not in KINDS:
            raise FamilyError(f"unknown family kind {kind!r}; expected one of {sorted(KINDS)}")
        names = KINDS[kind]
        extra = set(params) - set(names)
        if extra:
            raise FamilyError(f"{kind} takes parameters {names}, got unexpected {sorted(extra)}")
        vals = []
        for name in names:
            if name in params:
                vals.append((name, _param(name, params[name])))
            elif name in _DEFAULTS:
                vals.append((name, _DEFAULTS[name]))
            else:
                raise FamilyError(f"{kind} requires parameter {name}")
        if kind == "Z" and dict(vals)["n"] == 1 and dict(vals)["b"] != 0:
            # Z(1, b) at scale s is Z(1, 1) at scale s * b
            d = dict(vals)
            vals = [("n", 1), ("b", Fraction(1)), ("scale", d["scale"] * d["b"])]
        spec = cls(kind, tuple(vals))
        spec.validate()
        return spec

    def __getitem__(self, name: str):
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)

    def validate(self) -> None:
        p = dict(self.params)
        kind = self.kind
        if kind in ("Ladders", "Z") and p["scale"] == 0:
            raise FamilyError("scale must be nonzero")
        if kind == "Z":
            if p["n"] < 1:
                raise FamilyError("Z needs n >= 1")
            if p["b"] == 0:
                raise FamilyError("Z needs b != 0")
        if kind.startswith("Case") and p["a1"] == 0:
            raise FamilyError(f"{kind} needs a1 != 0")
        if kind == "ScaledCorolla" and p["k"] < 0:
            raise FamilyError("ScaledCorolla needs k >= 0")
        if kind == "CorollaDiagonal" and not any(p["coeffs"]):
            raise FamilyError("CorollaDiagonal needs a nonzero polynomial")
        if kind in ("Seq01A", "Seq01B", "Seq01C") and p["m"] < 2:
            raise FamilyError(f"{kind} needs m >= 2")

    def to_json(self):
        out = {}
        for k, v in self.params:
            if isinstance(v, tuple):
                out[k] = [str(c) for c in v]
            elif isinstance(v, Fraction):
                out[k] = str(v)
            else:
                out[k] = v
        return {"kind": self.kind, "params": out}

    @classmethod
    def from_json(cls, obj) -> "FamilySpec":
        return cls.make(obj["kind"], **obj.get("params", {}))

    def __str__(self):
        inner = ", ".join(
            f"{k}=" + ("[" + ",".join(map(str, v)) + "]" if isinstance(v, tuple) else str(v))
            for k, v in self.params
        )
        return f"{self.kind}({inner})"


# ---------------------------------------------------------------- arrays


def _entry_fn(spec: FamilySpec) -> Callable[[int, int], Fraction]:
    p = dict(spec.params)
    kind = spec.kind

    if kind == "Ladders":
        s = p["scale"]
        return lambda i, j: s

    if kind == "Z":
        n, b, s = p["n"], p["b"], p["scale"]
        return lambda i, j: s if j < n else (s * b if j == n else Fraction(0))

    if kind == "CaseA":
        a1, a2, b = p["a1"], p["a2"], p["b"]

        def f(i, j):
            if j == 1:
                return a1 * i + b
            if j == 2:
                return a2 * i + b
            return a1 * a2 * i / _nonzero((j - 1) * a1 - (j - 2) * a2, j) + b

        return f

    if kind == "CaseB":
        a1, a2 = p["a1"], p["a2"]
        return lambda i, j: (a2 if j == 2 else a1) * (i - 2)

    if kind == "CaseC":
        a1, a2 = p["a1"], p["a2"]

        def f(i, j):
            if j == 1:
                return a1 * (i + 2)
            if j == 2:
                return a2 * (i + 4)
            den = Fraction((j - 1) * j * (j + 1), 6) * a1 - Fraction((j - 2) * j * (j + 2), 3) * a2
            return a1 * a2 * (2 * j + i) / _nonzero(den, j)

        return f

    if kind == "CaseD":
        a1, a2 = p["a1"], p["a2"]

        def f(i, j):
            if j == 1:
                return a1 * (i + 1)
            if j == 2:
                return a2 * (i + 2)
            den = Fraction((j - 1) * j, 2) * a1 - (j - 2) * j * a2
            return a1 * a2 * (i + j) / _nonzero(den, j)

        return f

    if kind == "CaseE":
        a1, b = p["a1"], p["b"]
        return lambda i, j: a1 * i + b if j == 1 else Fraction(0)

    if kind == "ScaledCorolla":
        k = p["k"]
        return lambda i, j: Fraction(i * (i + 1) ** k) if j == 1 else Fraction(0)

    if kind == "CorollaDiagonal":
        cs = p["coeffs"]
        return lambda i, j: sum(c * i**r for r, c in enumerate(cs)) if j == 1 else Fraction(0)

    if kind == "Seq01AllOnes":
        return lambda i, j: Fraction(1)

    if kind == "Seq01A":
        m = p["m"]
        return lambda i, j: Fraction(1 if j < m else 0)

    if kind == "Seq01B":
        m = p["m"]
        return lambda i, j: Fraction(1 - i if j % m == 0 else 1)

    if kind == "Seq01C":
        m = p["m"]
        return lambda i, j: Fraction(1 - i if j == m else 1)

    raise FamilyError(f"no array formula for {kind}")


def _nonzero(den: Fraction, j: int) -> Fraction:
    if den == 0:
        raise FamilyError(f"zero denominator in column j={j}")
    return den


def family_array(spec: FamilySpec, N: int) -> LambdaArray:
    """Fill the window i + j <= N with the family's closed formula."""
    return LambdaArray.from_function(_entry_fn(spec), N)


# ---------------------------------------------------------------- matching


@dataclass(frozen=True)
class MatchResult:
    matched: FamilySpec | None
    certificate: int  # number of window entries compared
    window: int
    failure_witness: tuple[int, int] | None = None
    tried: tuple[str, ...] = field(default=())

    def __bool__(self):
        return self.matched is not None

    def to_json(self):
        return {
            "matched": self.matched.to_json() if self.matched else None,
            "certificate": {"window": self.window, "entries_checked": self.certificate},
            "failure_witness": list(self.failure_witness) if self.failure_witness else None,
            "tried": list(self.tried),
        }


def _first_mismatch(a: LambdaArray, spec: FamilySpec) -> tuple[int, int] | None:
    try:
        f = _entry_fn(spec)
        for n in range(2, a.N + 1):
            for j in range(1, n):
                if f(n - j, j) != a(n - j, j):
                    return (n - j, j)
    except FamilyError:
        return (0, 0)
    return None


def _candidates(a: LambdaArray):
    """Specs read from the smallest entries, in precedence order."""
    l11 = a(1, 1)
    l21 = a(2, 1) if a.N >= 3 else None
    l12 = a(1, 2) if a.N >= 3 else None

    # order 0: every column constant; scale fixed by lam(1,1)
    if l11 != 0:
        col_vals = []
        for j in range(1, a.N):
            col_vals.append(a(1, j) / l11)
        if all(v == 1 for v in col_vals):
            yield FamilySpec.make("Ladders", scale=l11)
        else:
            n = next(j for j, v in enumerate(col_vals, 1) if v != 1)
            b = col_vals[n - 1]
            if b != 0:
                yield FamilySpec.make("Z", n=n, b=b, scale=l11)
            elif n >= 2:
                yield FamilySpec.make("Z", n=n - 1, b=1, scale=l11)

    if l21 is None:
        return
    # order 1
    a1 = l21 - l11
    b = 2 * l11 - l21
    if a1 != 0:
        yield FamilySpec.make("CaseA", a1=a1, a2=l12 - b, b=b)
    if l11 != 0:
        yield FamilySpec.make("CaseB", a1=-l11, a2=-l12)
        yield FamilySpec.make("CaseC", a1=l11 / 3, a2=l12 / 5)
        yield FamilySpec.make("CaseD", a1=l11 / 2, a2=l12 / 3)
    if a1 != 0:
        yield FamilySpec.make("CaseE", a1=a1, b=b)

    # order >= 2: only the leftmost column survives
    if l11 != 0 and l11.denominator == 1:
        k = round(math.log2(l11)) if l11 > 0 else -1
        if k >= 0 and 2**k == l11:
            yield FamilySpec.make("ScaledCorolla", k=k)
    col = a.column(1)
    coeffs = _interpolate(col)
    if len(coeffs) >= 3 and len(col) >= len(coeffs) + 2:
        yield FamilySpec.make("CorollaDiagonal", coeffs=coeffs)

    # 0/1 arrays
    bits = [a(1, j) for j in range(1, a.N)]
    if all(x in (0, 1) for x in bits) and bits[0] == 1:
        yield from seq01_classify(bits)


def _interpolate(ys: list[Fraction]) -> tuple[Fraction, ...]:
    """Monomial coefficients of the lowest-degree polynomial through (i, ys[i-1])."""
    from .lambda_arrays import forward_differences

    table = forward_differences(ys)
    deg = max((k for k, row in enumerate(table) if any(row)), default=0)
    # Newton form from i = 1, converted to monomials
    coeffs = [Fraction(0)] * (deg + 1)
    basis = [Fraction(1)]  # (i - 1)(i - 2)...(i - k) / k! in monomial coefficients
    for k in range(deg + 1):
        d = table[k][0]
        for r, c in enumerate(basis):
            coeffs[r] += d * c
        nxt = [Fraction(0)] * (len(basis) + 1)
        for r, c in enumerate(basis):
            nxt[r + 1] += c / (k + 1)
            nxt[r] -= c
        basis = nxt
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def match_family(a: LambdaArray) -> MatchResult:
    """First family (in precedence order) whose formula equals a on the whole window."""
    tried = []
    witness = None
    total = a.N * (a.N - 1) // 2
    for spec in _candidates(a):
        tried.append(str(spec))
        bad = _first_mismatch(a, spec)
        if bad is None:
            return MatchResult(spec, total, a.N, None, tuple(tried))
        if witness is None:
            witness = bad
    return MatchResult(None, total, a.N, witness, tuple(tried))


def random_spec(kind: str, rng: random.Random, N: int = 8) -> FamilySpec:
    """Draw small random rational parameters valid on the window."""

    def q():
        while True:
            v = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
            if v:
                return v

    for _ in range(1000):
        try:
            if kind == "CaseA":
                spec = FamilySpec.make(kind, a1=q(), a2=q(), b=q())
            elif kind in ("CaseB", "CaseC", "CaseD"):
                spec = FamilySpec.make(kind, a1=q(), a2=q())
            elif kind == "CaseE":
                spec = FamilySpec.make(kind, a1=q(), b=q())
            elif kind == "Z":
                spec = FamilySpec.make(kind, n=rng.randint(1, 4), b=q())
            else:
                raise FamilyError(f"no random draw for {kind}")
            arr = family_array(spec, N)
        except FamilyError as e:
            if "no random draw" in str(e):
                raise
            continue
        except ZeroDivisionError:
            continue
        if not nondegeneracy_failures(arr):
            return spec
    raise FamilyError(f"could not draw a nondegenerate {kind} instance")


# ---------------------------------------------------------------- 0/1 arrays


def seq01_classify(bits: list) -> list[FamilySpec]:
    """Variants consistent with the rightmost entries x_j = lam(1, j), j = 1..M.

    Returns every consistent variant (several when the window is short);
    an empty list means the pattern is impossible for a 0/1 array.
    """
    xs = [Fraction(x) for x in bits]
    if not xs or xs[0] != 1 or any(x not in (0, 1) for x in xs):
        return []
    M = len(xs)
    zeros = [j for j, x in enumerate(xs, 1) if x == 0]
    if not zeros:
        return [FamilySpec.make("Seq01AllOnes")]
    m = zeros[0]
    out = []
    if all(xs[j - 1] == (1 if j < m else 0) for j in range(1, M + 1)):
        out.append(FamilySpec.make("Seq01A", m=m))
    if all(xs[j - 1] == (0 if j % m == 0 else 1) for j in range(1, M + 1)):
        out.append(FamilySpec.make("Seq01B", m=m))
    if all(xs[j - 1] == (0 if j == m else 1) for j in range(1, M + 1)):
        out.append(FamilySpec.make("Seq01C", m=m))
    return out


def seq01_classify_array(a: LambdaArray) -> list[FamilySpec]:
    """Variants whose full array (not just the rightmost entries) equals a on the window."""
    bits = [a(1, j) for j in range(1, a.N)]
    return [s for s in seq01_classify(bits) if _first_mismatch(a, s) is None]


def seq01_an(m: int, n: int) -> Fraction:
    """Coefficient of X^n in (1 + X) (1 - (-X)^m)^(-1/m), by binomial series."""
    if m < 2:
        raise FamilyError("m must be >= 2")
    h = _h_series(m, n)
    return h[n] + (h[n - 1] if n >= 1 else 0)


def _h_series(m: int, n: int) -> list[Fraction]:
    # (1 + u)^(-1/m) with u = -(-X)^m
    base = PowerSeries.binomial(1, Fraction(-1, m), n // m + 1)
    out = [Fraction(0)] * (n + 1)
    sign = -((-1) ** m)
    for k in range(n // m + 1):
        out[k * m] = base[k] * Fraction(sign) ** k
    return out


def cycle_index(n: int, x: Callable[[int], Fraction]) -> Fraction:
    """Cycle index of the symmetric group on n letters with X_i -> x(i)."""
    total = Fraction(0)
    for part in partitions(n):
        counts: dict[int, int] = {}
        for p in part:
            counts[p] = counts.get(p, 0) + 1
        term = Fraction(1)
        for i, c in counts.items():
            term *= x(i) ** c / (Fraction(i) ** c * math.factorial(c))
        total += term
    return total


def seq01_an_via_cycle_index(m: int, n: int) -> Fraction:
    """a_n as the cycle index with X_i -> 0 if m | i, else (-1)^(i+1)."""
    if m < 2:
        raise FamilyError("m must be >= 2")
    return cycle_index(n, lambda i: Fraction(0) if i % m == 0 else Fraction((-1) ** (i + 1)))


def seq01_an_piecewise(m: int, n: int) -> Fraction:
    """a_n from the factored form (1 + X) * sum_n Z_n(X_i -> (-1)^i if m | i else 0).

    The second factor lives on multiples of m, so a_n = h_n when m | n,
    a_n = h_(n-1) = a_(n-1) when m | n - 1, and 0 otherwise.
    """
    if m < 2:
        raise FamilyError("m must be >= 2")

    def h(k: int) -> Fraction:
        return cycle_index(k, lambda i: Fraction((-1) ** i) if i % m == 0 else Fraction(0))

    if n % m == 0:
        return h(n)
    if (n - 1) % m == 0:
        return h(n - 1)
    return Fraction(0)


def seq01_corolla_coeff(s: Seq, n: int) -> Fraction:
    """Coefficient of the corolla with n leaves in t_(n+1)."""
    if n + 1 > s.N:
        raise LambdaError(f"t_{n + 1} is outside the window N={s.N}")
    return s.t(n + 1).tree_terms().get(corolla(n + 1), Fraction(0))


# ---------------------------------------------------------------- order-2 search


@dataclass(frozen=True)
class ExtensionSearch:
    """Outcome of the exhaustive degree-2 search.

    ``generic_forces_zero``: with the leftmost column nonzero at 1..N-1, every
    coefficient of columns 2..N-1 lies in the ideal cut out by the relations.
    ``special``: for each alpha making the leftmost column vanish at some
    p <= N - 1, whether any solution keeps row p + 1 nonzero.
    """

    a1: Fraction
    b: Fraction
    N: int
    generic_forces_zero: bool
    special: tuple[tuple[int, Fraction, bool], ...]

    @property
    def only_corolla_type(self) -> bool:
        return self.generic_forces_zero and not any(found for _, _, found in self.special)

    def to_json(self):
        return {
            "a1": str(self.a1),
            "b": str(self.b),
            "N": self.N,
            "generic_forces_zero": self.generic_forces_zero,
            "special_alphas": [
                {"root_at": p, "alpha": str(al), "nondegenerate_solution": found}
                for p, al, found in self.special
            ],
            "only_corolla_type": self.only_corolla_type,
        }


def search_second_order_extensions(a1, b, N: int = 7) -> ExtensionSearch:
    """Exhaustive search for arrays with quadratic columns extending lam(1,1), lam(2,1).

    The leftmost column is a1*i + b + alpha*(i - 1)(i - 2) with alpha != 0, so
    it has order exactly 2; columns 2..N-1 are unknown quadratics. PL(i, j, k)
    with j + k <= N - 1 is imposed as a polynomial identity in i. The search
    splits on whether the leftmost column vanishes at some p in 3..N-1:

    * if not, a lex Groebner basis must contain every unknown coefficient;
    * if so, alpha is fixed, and requiring any entry of row p + 1 to be
      nonzero must make the system inconsistent.
    """
    import sympy as sp

    a1, b = Fraction(a1), Fraction(b)
    if a1 + b == 0 or 2 * a1 + b == 0:
        raise FamilyError("prefix entries lam(1,1), lam(2,1) must be nonzero")
    A1, B = sp.Rational(a1.numerator, a1.denominator), sp.Rational(b.numerator, b.denominator)
    i, alpha, w, u, y = sp.symbols("i alpha w u y")
    cs = {(j, r): sp.Symbol(f"c_{j}_{r}") for j in range(2, N) for r in range(3)}
    unknowns = list(cs.values())

    def f(j, x, al=alpha):
        if j == 1:
            return A1 * x + B + al * (x - 1) * (x - 2)
        return sum(cs[(j, r)] * x**r for r in range(3))

    def relations(al):
        eqs = set()
        for j in range(1, N):
            for k in range(1, N - j):
                e = (
                    f(j, i, al) * f(k, i + j, al) - f(k, j, al) * f(j + k, i, al)
                    - f(k, i, al) * f(j, i + k, al) + f(j, k, al) * f(k + j, i, al)
                )
                eqs.update(c for c in sp.Poly(sp.expand(e), i).all_coeffs() if c != 0)
        return eqs

    eqs = relations(alpha)
    guard = alpha
    for p in range(3, N):
        guard *= f(1, p)
    gb = sp.groebner(
        sorted(eqs | {sp.expand(u * guard - 1)}, key=sp.default_sort_key),
        *unknowns, u, alpha, order="lex",
    )
    generic = all(gb.reduce(c)[1] == 0 for c in unknowns)

    special = []
    for p in range(3, N):
        al = -(a1 * p + b) / ((p - 1) * (p - 2))
        if al == 0:
            continue
        AL = sp.Rational(al.numerator, al.denominator)
        eqs_p = sorted(relations(AL), key=sp.default_sort_key)
        found = False
        for j in range(2, p + 1):
            entry = sp.expand(f(j, p + 1 - j, AL))
            g = sp.groebner(eqs_p + [sp.expand(y * entry - 1)], *unknowns, y, order="grevlex")
            if g.exprs != [1]:
                found = True
                break
        special.append((p, al, found))
    return ExtensionSearch(a1, b, N, generic, tuple(special))
