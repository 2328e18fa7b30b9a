"""Exact span membership over sparse rational vectors.

Vectors are dicts from hashable keys to Fraction. ``SpanSolver`` keeps an
echelon form of a list of generators together with each echelon row's
expression in the original generators, so a target can be written as a
combination of the generators (plus a residual outside their span).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Mapping, Sequence

Vec = dict


def _axpy(y: dict, a: Fraction, x: Mapping) -> None:
    # y += a * x, dropping zeros
    for k, v in x.items():
        w = y.get(k, 0) + a * v
        if w:
            y[k] = w
        else:
            y.pop(k, None)


class SpanSolver:
    def __init__(self, generators: Sequence[Mapping[Hashable, Fraction]], key=None):
        self._key = key or (lambda k: k)
        self.size = len(generators)
        self._rows: list[tuple[Hashable, dict, dict]] = []  # (pivot, vec, combo)
        for idx, g in enumerate(generators):
            vec = {k: Fraction(v) for k, v in g.items() if v}
            combo = {idx: Fraction(1)}
            self._reduce(vec, combo)
            if vec:
                pivot = min(vec, key=self._key)
                inv = 1 / vec[pivot]
                vec = {k: v * inv for k, v in vec.items()}
                combo = {k: v * inv for k, v in combo.items()}
                # keep earlier rows reduced against the new pivot
                for j, (p, v2, c2) in enumerate(self._rows):
                    f = v2.get(pivot)
                    if f:
                        _axpy(v2, -f, vec)
                        _axpy(c2, -f, combo)
                self._rows.append((pivot, vec, combo))
        self.rank = len(self._rows)

    def _reduce(self, vec: dict, combo: dict) -> None:
        for pivot, row, rcombo in self._rows:
            f = vec.get(pivot)
            if f:
                _axpy(vec, -f, row)
                _axpy(combo, -f, rcombo)

    def express(self, target: Mapping[Hashable, Fraction]) -> tuple[dict, dict]:
        """Return (coefficients over generator indices, residual vector)."""
        vec = {k: Fraction(v) for k, v in target.items() if v}
        combo: dict = {}
        for pivot, row, rcombo in self._rows:
            f = vec.get(pivot)
            if f:
                _axpy(vec, -f, row)
                _axpy(combo, f, rcombo)
        return combo, vec


def solve_square(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Solve a x = b for square a; None when singular."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(b[i])] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]
